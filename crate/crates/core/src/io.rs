//! On-disk formats.
//!
//! Scientific inputs and intermediate results are JSON documents of the form
//!
//! ```text
//! { "format_version": 1, "kind": "<kind>", "data": { ... } }
//! ```
//!
//! | kind          | data                                                         |
//! |---------------|--------------------------------------------------------------|
//! | `structure`   | `lattice_vectors` (rows, Å), `atoms` (`species`, `mass` amu, `position` Å, `layer`), `periodic` |
//! | `forceset`    | `reference` (a structure), `step` Å, `records`: `atom`, `axis` (`x`/`y`/`z`), `sign` (`+`/`-`), `forces` (N rows, eV/Å) |
//! | `zfs_samples` | `step` Å·√amu, `samples`: `mode`, `energy_meV`, `center`, `plus`, `minus` (row-major 3×3, GHz) |
//! | `modes`       | `frequencies` meV, `imaginary`, `vectors` (one 3N list per mode), `masses` amu |
//! | `derivatives` | `step`, `cutoff`, `equilibrium`, `modes`: `mode`, `energy`, `first`, `second` (row-major, GHz), optional `symmetry` |
//!
//! Tabular outputs are CSV with fixed headers and every number written as
//! `{:.8e}` (nine significant digits); a zero rate gives `T1_s = inf`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::dos::DosCurve;
use crate::lattice::forcefield::ToyParams;
use crate::lattice::hessian::{DisplacementForceSet, DEFAULT_DISPLACEMENT_STEP};
use crate::lattice::modes::PhononModes;
use crate::spin::{relative_asymmetry, DTensor};
use crate::spinphonon::{Channel, SpectralFunction, TemperatureGrid, DEFAULT_CUTOFF, DEFAULT_SIGMA};
use crate::structure::Supercell;
use crate::zfs::{DTensorDerivatives, ZfsSample, ZfsSampleSet, DEFAULT_DERIVATIVE_STEP};

pub const FORMAT_VERSION: u32 = 1;

pub const DOS_HEADER: &str = "energy_meV,dos_per_meV";
pub const SPECTRAL_HEADER: &str = "energy_meV,F_double,F_single,F_dephase";
pub const RATES_HEADER: &str = "T_K,gamma_double_Hz,gamma_single_Hz,gamma_dephase_Hz,T1_s";
pub const REFERENCE_HEADER: &str = "T_K,gamma_Hz";

// tensors more asymmetric than this are reported when read
const ASYMMETRY_WARNING: f64 = 1e-6;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Document<T> {
    format_version: u32,
    kind: String,
    data: T,
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn parse_error(path: &Path, message: impl Into<String>) -> Error {
    Error::Parse { path: path.display().to_string(), message: message.into() }
}

/// Serialize `data` as a versioned document of the given kind.
pub fn to_document<T: Serialize>(kind: &str, data: &T) -> Result<String> {
    let doc = Document { format_version: FORMAT_VERSION, kind: kind.to_string(), data };
    let mut s = serde_json::to_string_pretty(&doc).map_err(|e| Error::Computation(format!("serialization failed: {e}")))?;
    s.push('\n');
    Ok(s)
}

/// Parse a versioned document, checking its kind and version.
pub fn from_document<T: DeserializeOwned>(kind: &str, text: &str, path: &Path) -> Result<T> {
    let doc: Document<T> = serde_json::from_str(text).map_err(|e| parse_error(path, e.to_string()))?;
    if doc.format_version != FORMAT_VERSION {
        return Err(parse_error(
            path,
            format!("unsupported format_version {} (expected {FORMAT_VERSION})", doc.format_version),
        ));
    }
    if doc.kind != kind {
        return Err(parse_error(path, format!("expected a {kind:?} document, found {:?}", doc.kind)));
    }
    Ok(doc.data)
}

fn write_document<T: Serialize>(kind: &str, data: &T, path: &Path) -> Result<()> {
    write_text(path, &to_document(kind, data)?)
}

fn read_document<T: DeserializeOwned>(kind: &str, path: &Path) -> Result<T> {
    from_document(kind, &read_text(path)?, path)
}

pub fn write_structure(cell: &Supercell, path: &Path) -> Result<()> {
    write_document("structure", cell, path)
}

pub fn parse_structure(path: &Path) -> Result<Supercell> {
    let cell: Supercell = read_document("structure", path)?;
    cell.validate().map_err(|e| parse_error(path, e.to_string()))?;
    Ok(cell)
}

pub fn write_forceset(set: &DisplacementForceSet, path: &Path) -> Result<()> {
    write_document("forceset", set, path)
}

pub fn forceset_from_str(text: &str, path: &Path) -> Result<DisplacementForceSet> {
    let set: DisplacementForceSet = from_document("forceset", text, path)?;
    set.validate().map_err(|e| match e {
        Error::MissingRecord(m) => Error::MissingRecord(format!("{}: {m}", path.display())),
        other => parse_error(path, other.to_string()),
    })?;
    Ok(set)
}

pub fn parse_forceset(path: &Path) -> Result<DisplacementForceSet> {
    forceset_from_str(&read_text(path)?, path)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSample {
    mode: usize,
    #[serde(rename = "energy_meV")]
    energy: f64,
    center: Option<[f64; 9]>,
    plus: Option<[f64; 9]>,
    minus: Option<[f64; 9]>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSampleSet {
    step: f64,
    samples: Vec<RawSample>,
}

pub fn write_zfs_samples(set: &ZfsSampleSet, path: &Path) -> Result<()> {
    write_text(path, &zfs_samples_to_string(set)?)
}

pub fn zfs_samples_to_string(set: &ZfsSampleSet) -> Result<String> {
    let raw = RawSampleSet {
        step: set.step,
        samples: set
            .samples
            .iter()
            .map(|s| RawSample {
                mode: s.mode,
                energy: s.energy,
                center: Some(s.center.to_row_major()),
                plus: Some(s.plus.to_row_major()),
                minus: Some(s.minus.to_row_major()),
            })
            .collect(),
    };
    to_document("zfs_samples", &raw)
}

/// Parse a ZFS sample file. Tensors are symmetrized; asymmetry above 1e-6
/// (relative) is returned as a warning.
pub fn zfs_samples_from_str(text: &str, path: &Path) -> Result<(ZfsSampleSet, Vec<String>)> {
    let raw: RawSampleSet = from_document("zfs_samples", text, path)?;
    let mut warnings = Vec::new();
    let mut samples = Vec::with_capacity(raw.samples.len());
    for s in raw.samples {
        let mut get = |which: &str, v: Option<[f64; 9]>| -> Result<DTensor> {
            let v = v.ok_or_else(|| {
                Error::MissingRecord(format!("{}: mode {} has no {which} tensor", path.display(), s.mode))
            })?;
            if v.iter().any(|x| !x.is_finite()) {
                return Err(parse_error(path, format!("mode {} {which} tensor has non-finite entries", s.mode)));
            }
            let m = nalgebra::Matrix3::from_row_slice(&v);
            let asym = relative_asymmetry(&m);
            if asym > ASYMMETRY_WARNING {
                warnings.push(format!("mode {} {which} tensor symmetrized (relative asymmetry {asym:.2e})", s.mode));
            }
            Ok(DTensor::symmetrized(m).0)
        };
        let center = get("center", s.center)?;
        let plus = get("plus", s.plus)?;
        let minus = get("minus", s.minus)?;
        samples.push(ZfsSample { mode: s.mode, energy: s.energy, center, plus, minus });
    }
    let set = ZfsSampleSet { step: raw.step, samples };
    set.validate().map_err(|e| parse_error(path, e.to_string()))?;
    Ok((set, warnings))
}

pub fn parse_zfs_samples(path: &Path) -> Result<(ZfsSampleSet, Vec<String>)> {
    zfs_samples_from_str(&read_text(path)?, path)
}

pub fn write_modes(modes: &PhononModes, path: &Path) -> Result<()> {
    write_document("modes", modes, path)
}

pub fn parse_modes(path: &Path) -> Result<PhononModes> {
    let m: PhononModes = read_document("modes", path)?;
    let n = m.frequencies.len();
    if m.imaginary.len() != n || m.vectors.len() != n || m.vectors.iter().any(|v| v.len() != 3 * m.masses.len()) {
        return Err(parse_error(path, "inconsistent mode counts or vector lengths"));
    }
    Ok(m)
}

pub fn write_derivatives(d: &DTensorDerivatives, path: &Path) -> Result<()> {
    write_document("derivatives", d, path)
}

pub fn parse_derivatives(path: &Path) -> Result<DTensorDerivatives> {
    read_document("derivatives", path)
}

fn num(x: f64) -> String {
    format!("{x:.8e}")
}

fn csv_lines(header: &str, rows: impl Iterator<Item = Vec<String>>) -> String {
    let mut s = String::from(header);
    s.push('\n');
    for row in rows {
        let _ = writeln!(s, "{}", row.join(","));
    }
    s
}

pub fn dos_csv(dos: &DosCurve) -> Result<String> {
    if dos.energies.is_empty() {
        return Err(Error::validation("DOS curve is empty"));
    }
    Ok(csv_lines(DOS_HEADER, dos.energies.iter().zip(&dos.density).map(|(e, d)| vec![num(*e), num(*d)])))
}

/// Spectral functions of the three channels on a shared grid.
pub fn spectral_csv(double: &SpectralFunction, single: &SpectralFunction, dephase: &SpectralFunction) -> Result<String> {
    if double.energies.is_empty() {
        return Err(Error::validation("spectral function is empty"));
    }
    if double.energies != single.energies || double.energies != dephase.energies {
        return Err(Error::validation("spectral functions are on different grids"));
    }
    Ok(csv_lines(
        SPECTRAL_HEADER,
        (0..double.energies.len()).map(|k| {
            vec![num(double.energies[k]), num(double.values[k]), num(single.values[k]), num(dephase.values[k])]
        }),
    ))
}

/// Rates of all three channels over one temperature grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateTable {
    pub temperatures: Vec<f64>,
    pub double: Vec<f64>,
    pub single: Vec<f64>,
    pub dephase: Vec<f64>,
}

impl RateTable {
    pub fn len(&self) -> usize {
        self.temperatures.len()
    }

    pub fn is_empty(&self) -> bool {
        self.temperatures.is_empty()
    }

    pub fn channel(&self, c: Channel) -> &[f64] {
        match c {
            Channel::DoubleQuantum => &self.double,
            Channel::SingleQuantum => &self.single,
            Channel::Dephasing => &self.dephase,
        }
    }

    /// Population relaxation time 1/(Γ_double + Γ_single), s; NaN when a
    /// channel was not computed.
    pub fn t1(&self) -> Vec<f64> {
        self.double.iter().zip(&self.single).map(|(d, s)| 1.0 / (d + s)).collect()
    }
}

pub fn rates_csv(t: &RateTable) -> Result<String> {
    if t.is_empty() {
        return Err(Error::validation("rate table is empty"));
    }
    let n = t.len();
    if t.double.len() != n || t.single.len() != n || t.dephase.len() != n {
        return Err(Error::validation("rate columns differ in length"));
    }
    let t1 = t.t1();
    Ok(csv_lines(
        RATES_HEADER,
        (0..n).map(|k| {
            let t1 = if t1[k].is_nan() {
                "nan".to_string()
            } else if t1[k].is_infinite() {
                "inf".to_string()
            } else {
                num(t1[k])
            };
            vec![num(t.temperatures[k]), num(t.double[k]), num(t.single[k]), num(t.dephase[k]), t1]
        }),
    ))
}

pub fn reference_csv(points: &[(f64, f64)]) -> Result<String> {
    if points.is_empty() {
        return Err(Error::validation("reference table is empty"));
    }
    Ok(csv_lines(REFERENCE_HEADER, points.iter().map(|(t, g)| vec![num(*t), num(*g)])))
}

fn parse_csv(text: &str, header: &str, path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == header => {}
        Some(h) => return Err(parse_error(path, format!("expected header {header:?}, found {h:?}"))),
        None => return Err(parse_error(path, "empty file")),
    }
    let cols = header.split(',').count();
    let mut rows = Vec::new();
    for (k, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != cols {
            return Err(parse_error(path, format!("line {}: expected {cols} fields, found {}", k + 2, fields.len())));
        }
        let row = fields
            .iter()
            .map(|f| f.trim().parse::<f64>().map_err(|_| parse_error(path, format!("line {}: bad number {f:?}", k + 2))))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(parse_error(path, "no data rows"));
    }
    Ok(rows)
}

pub fn rates_from_str(text: &str, path: &Path) -> Result<RateTable> {
    let rows = parse_csv(text, RATES_HEADER, path)?;
    Ok(RateTable {
        temperatures: rows.iter().map(|r| r[0]).collect(),
        double: rows.iter().map(|r| r[1]).collect(),
        single: rows.iter().map(|r| r[2]).collect(),
        dephase: rows.iter().map(|r| r[3]).collect(),
    })
}

pub fn parse_rates_csv(path: &Path) -> Result<RateTable> {
    rates_from_str(&read_text(path)?, path)
}

pub fn reference_from_str(text: &str, path: &Path) -> Result<Vec<(f64, f64)>> {
    Ok(parse_csv(text, REFERENCE_HEADER, path)?.into_iter().map(|r| (r[0], r[1])).collect())
}

pub fn parse_reference_csv(path: &Path) -> Result<Vec<(f64, f64)>> {
    reference_from_str(&read_text(path)?, path)
}

pub fn dos_from_str(text: &str, path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let rows = parse_csv(text, DOS_HEADER, path)?;
    Ok((rows.iter().map(|r| r[0]).collect(), rows.iter().map(|r| r[1]).collect()))
}

/// Input file locations named in a run configuration.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputPaths {
    pub forceset: Option<PathBuf>,
    pub zfs_samples: Option<PathBuf>,
    pub modes: Option<PathBuf>,
    pub derivatives: Option<PathBuf>,
    pub rates: Option<PathBuf>,
    pub reference: Option<PathBuf>,
}

/// Every tunable of a pipeline run, with defaults filled in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    /// meV
    pub sigma: f64,
    /// meV
    pub cutoff: f64,
    pub temperatures: TemperatureGrid,
    /// Å·√amu
    pub derivative_step: f64,
    /// Å
    pub displacement_step: f64,
    pub channels: Vec<Channel>,
    pub toy: ToyParams,
    pub inputs: InputPaths,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            sigma: DEFAULT_SIGMA,
            cutoff: DEFAULT_CUTOFF,
            temperatures: TemperatureGrid::default(),
            derivative_step: DEFAULT_DERIVATIVE_STEP,
            displacement_step: DEFAULT_DISPLACEMENT_STEP,
            channels: Channel::ALL.to_vec(),
            toy: ToyParams::default(),
            inputs: InputPaths::default(),
            output_dir: PathBuf::from("."),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        for (key, v) in [
            ("sigma", self.sigma),
            ("cutoff", self.cutoff),
            ("derivative_step", self.derivative_step),
            ("displacement_step", self.displacement_step),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::validation(format!("{key} must be positive, got {v}")));
            }
        }
        self.temperatures.validate()?;
        self.toy.validate()?;
        if self.channels.is_empty() {
            return Err(Error::validation("channels must name at least one channel"));
        }
        Ok(())
    }
}

type Spanned<T> = toml::Spanned<T>;

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawTemperatures {
    min: Option<Spanned<f64>>,
    max: Option<Spanned<f64>>,
    points: Option<Spanned<i64>>,
    spacing: Option<Spanned<String>>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawToy {
    k_bond: Option<Spanned<f64>>,
    k_ti: Option<Spanned<f64>>,
    k_z: Option<Spanned<f64>>,
    k_inter: Option<Spanned<f64>>,
    k_shear: Option<Spanned<f64>>,
    bond_cutoff: Option<Spanned<f64>>,
    interlayer_cutoff: Option<Spanned<f64>>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    sigma: Option<Spanned<f64>>,
    cutoff: Option<Spanned<f64>>,
    derivative_step: Option<Spanned<f64>>,
    displacement_step: Option<Spanned<f64>>,
    channels: Option<Spanned<Vec<String>>>,
    output_dir: Option<PathBuf>,
    #[serde(default)]
    temperatures: RawTemperatures,
    #[serde(default)]
    toy: RawToy,
    #[serde(default)]
    inputs: InputPaths,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Parse a TOML configuration. Missing keys keep their defaults, unknown
/// keys are errors, and every error names the key and its line.
///
/// ```text
/// sigma = 0.5
/// cutoff = 40
/// channels = ["double", "single"]
/// output_dir = "out"
///
/// [temperatures]
/// min = 10
/// max = 400
/// points = 40
/// spacing = "log"
///
/// [toy]
/// k_inter = 0.2
///
/// [inputs]
/// forceset = "data/forceset.json"
/// ```
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| {
        let line = e.span().map(|s| line_of(text, s.start)).unwrap_or(0);
        Error::validation(format!("config line {line}: {}", e.message()))
    })?;
    let mut c = RunConfig::default();
    let err = |key: &str, span: std::ops::Range<usize>, msg: String| {
        Error::validation(format!("config line {}: {key}: {msg}", line_of(text, span.start)))
    };
    let positive = |key: &str, v: &Option<Spanned<f64>>, dst: &mut f64| -> Result<()> {
        if let Some(v) = v {
            let x = *v.get_ref();
            if !(x > 0.0) || !x.is_finite() {
                return Err(err(key, v.span(), format!("must be positive, got {x}")));
            }
            *dst = x;
        }
        Ok(())
    };
    let non_negative = |key: &str, v: &Option<Spanned<f64>>, dst: &mut f64| -> Result<()> {
        if let Some(v) = v {
            let x = *v.get_ref();
            if !(x >= 0.0) || !x.is_finite() {
                return Err(err(key, v.span(), format!("must be non-negative, got {x}")));
            }
            *dst = x;
        }
        Ok(())
    };
    positive("sigma", &raw.sigma, &mut c.sigma)?;
    positive("cutoff", &raw.cutoff, &mut c.cutoff)?;
    positive("derivative_step", &raw.derivative_step, &mut c.derivative_step)?;
    positive("displacement_step", &raw.displacement_step, &mut c.displacement_step)?;
    positive("temperatures.min", &raw.temperatures.min, &mut c.temperatures.min)?;
    positive("temperatures.max", &raw.temperatures.max, &mut c.temperatures.max)?;
    if let Some(p) = &raw.temperatures.points {
        let n = *p.get_ref();
        if n < 2 {
            return Err(err("temperatures.points", p.span(), format!("must be at least 2, got {n}")));
        }
        c.temperatures.points = n as usize;
    }
    if let Some(s) = &raw.temperatures.spacing {
        c.temperatures.spacing =
            s.get_ref().parse().map_err(|e: Error| err("temperatures.spacing", s.span(), e.to_string()))?;
    }
    if c.temperatures.min >= c.temperatures.max {
        let span = raw.temperatures.min.as_ref().or(raw.temperatures.max.as_ref()).map(|v| v.span()).unwrap_or(0..0);
        return Err(err(
            "temperatures",
            span,
            format!("min {} must be below max {}", c.temperatures.min, c.temperatures.max),
        ));
    }
    if let Some(list) = &raw.channels {
        let mut channels = Vec::new();
        for name in list.get_ref() {
            let ch: Channel = name.parse().map_err(|e: Error| err("channels", list.span(), e.to_string()))?;
            if !channels.contains(&ch) {
                channels.push(ch);
            }
        }
        if channels.is_empty() {
            return Err(err("channels", list.span(), "must name at least one channel".into()));
        }
        c.channels = channels;
    }
    let t = &raw.toy;
    non_negative("toy.k_bond", &t.k_bond, &mut c.toy.k_bond)?;
    non_negative("toy.k_ti", &t.k_ti, &mut c.toy.k_ti)?;
    non_negative("toy.k_z", &t.k_z, &mut c.toy.k_z)?;
    non_negative("toy.k_inter", &t.k_inter, &mut c.toy.k_inter)?;
    non_negative("toy.k_shear", &t.k_shear, &mut c.toy.k_shear)?;
    positive("toy.bond_cutoff", &t.bond_cutoff, &mut c.toy.bond_cutoff)?;
    positive("toy.interlayer_cutoff", &t.interlayer_cutoff, &mut c.toy.interlayer_cutoff)?;
    c.inputs = raw.inputs;
    if let Some(o) = raw.output_dir {
        c.output_dir = o;
    }
    c.validate()?;
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::forcefield::ToyForceField;
    use crate::lattice::hessian::displacement_protocol;
    use crate::structure::{build_monolayer, build_stacked, Stacking};
    use proptest::prelude::*;

    fn p() -> PathBuf {
        PathBuf::from("test.json")
    }

    #[test]
    fn config_defaults_and_overrides() {
        let c = parse_config("").unwrap();
        assert_eq!(c, RunConfig::default());
        assert_eq!(c.cutoff, 40.0);
        assert_eq!(c.sigma, 1.0);
        assert_eq!(c.temperatures.points, 40);
        assert_eq!(c.derivative_step, 0.1);
        assert_eq!(c.displacement_step, 0.01);
        let c = parse_config("# comment\ncutoff = 60\nchannels = [\"double\", \"dephase\"]\n[toy]\nk_inter = 0.3\n").unwrap();
        assert_eq!(c.cutoff, 60.0);
        assert_eq!(c.toy.k_inter, 0.3);
        assert_eq!(c.channels, vec![Channel::DoubleQuantum, Channel::Dephasing]);
    }

    #[test]
    fn config_errors_name_key_and_line() {
        let e = parse_config("cutoff = 40\nsigma = -1\n").unwrap_err().to_string();
        assert!(e.contains("sigma") && e.contains("line 2"), "{e}");
        let e = parse_config("cutoff = 40\ncolour = \"blue\"").unwrap_err().to_string();
        assert!(e.contains("colour") && e.contains("line 2"), "{e}");
        let e = parse_config("sigma = \"abc\"").unwrap_err().to_string();
        assert!(e.contains("line 1"), "{e}");
        let e = parse_config("[temperatures]\nmin = 500").unwrap_err().to_string();
        assert!(e.contains("temperatures") && e.contains("line 2"), "{e}");
        assert!(parse_config("sigma = 1\nsigma = 2").is_err());
        assert!(parse_config("[toy]\nk_inter = -0.1").unwrap_err().to_string().contains("toy.k_inter"));
        assert!(parse_config("channels = [\"triple\"]").is_err());
    }

    #[test]
    fn forceset_round_trip_is_byte_identical() {
        let cell = build_monolayer(1, 1, 2.51).unwrap();
        let ff = ToyForceField::new(&cell, ToyParams::default()).unwrap();
        let set = displacement_protocol(&cell, 0.01, |c| ff.forces(c)).unwrap();
        let text = to_document("forceset", &set).unwrap();
        let back = forceset_from_str(&text, &p()).unwrap();
        assert_eq!(back, set);
        assert_eq!(to_document("forceset", &back).unwrap(), text);
    }

    #[test]
    fn forceset_errors() {
        let cell = build_stacked(1, 1, 2, Stacking::AAprime, 3.3).unwrap();
        let ff = ToyForceField::new(&cell, ToyParams::default()).unwrap();
        let set = displacement_protocol(&cell, 0.01, |c| ff.forces(c)).unwrap();
        let mut missing = set.clone();
        missing.records.retain(|r| !(r.atom == 3 && r.axis == crate::lattice::Axis::Y && r.sign == crate::lattice::Sign::Minus));
        let e = forceset_from_str(&to_document("forceset", &missing).unwrap(), &p()).unwrap_err();
        assert!(matches!(e, Error::MissingRecord(_)));
        assert!(e.to_string().contains("(atom 3, y, -)"), "{e}");
        let mut short = set.clone();
        short.records[0].forces.pop();
        assert!(forceset_from_str(&to_document("forceset", &short).unwrap(), &p()).is_err());
        assert!(forceset_from_str(&to_document("modes", &set).unwrap(), &p()).is_err());
    }

    fn sample_text(minus: &str) -> String {
        format!(
            r#"{{"format_version": 1, "kind": "zfs_samples", "data": {{"step": 0.1, "samples": [
                {{"mode": 4, "energy_meV": 12.0,
                  "center": [-0.9, 0, 0, 0, -0.9, 0, 0, 0, 1.8],
                  "plus": [-0.9, 0.001, 0, 0, -0.9, 0, 0, 0, 1.8]{minus}}}]}}}}"#
        )
    }

    #[test]
    fn zfs_samples_warn_and_reject() {
        let (set, warnings) =
            zfs_samples_from_str(&sample_text(r#", "minus": [-0.9, 0, 0, 0, -0.9, 0, 0, 0, 1.8]"#), &p()).unwrap();
        assert_eq!(set.samples.len(), 1);
        assert_eq!(warnings.len(), 1);
        assert_eq!(set.samples[0].plus.components()[(0, 1)], 0.0005);
        let e = zfs_samples_from_str(&sample_text(""), &p()).unwrap_err();
        assert!(e.to_string().contains("mode 4 has no minus"), "{e}");
    }

    #[test]
    fn csv_round_trips() {
        let t = RateTable {
            temperatures: vec![10.0, 150.0, 300.0],
            double: vec![0.0, 1.234567891234e5, 7e4],
            single: vec![0.0, 1e-3, 2.0],
            dephase: vec![1.0, 2.0, 3.0],
        };
        let text = rates_csv(&t).unwrap();
        assert_eq!(text.lines().count(), 4);
        assert!(text.lines().nth(1).unwrap().ends_with(",inf"));
        let back = rates_from_str(&text, &p()).unwrap();
        assert_eq!(back.temperatures, t.temperatures);
        // T1 is recomputed from the rounded rates, so compare from the first reread on
        let again = rates_csv(&back).unwrap();
        assert_eq!(rates_csv(&rates_from_str(&again, &p()).unwrap()).unwrap(), again);
        assert!(rates_csv(&RateTable { temperatures: vec![], double: vec![], single: vec![], dephase: vec![] }).is_err());
        assert!(rates_from_str("T,gamma\n1,2\n", &p()).is_err());
    }

    proptest! {
        #[test]
        fn reference_csv_is_idempotent(points in proptest::collection::vec((1.0f64..500.0, 1e-6f64..1e9), 1..20)) {
            let text = reference_csv(&points).unwrap();
            let back = reference_from_str(&text, &p()).unwrap();
            prop_assert_eq!(reference_csv(&back).unwrap(), text);
        }
    }
}
