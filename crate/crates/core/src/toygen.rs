//! Synthetic boron-vacancy datasets.
//!
//! A case is a defective supercell (monolayer, AA′ or ABC bilayer) whose
//! forces come from the toy spring model and whose D-tensor comes from the
//! point-dipole model with the spin spread evenly over the three N atoms
//! around the vacancy. The outputs are the same force-set and ZFS-sample
//! files an external first-principles workflow would produce.
//!
//! Stacked AA′ cases can amplify how strongly the N-site displacements
//! enter the dipolar model (`enhancement`). This is a phenomenological knob
//! standing in for interlayer electrostatics, not a derived quantity.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use nalgebra::Vector3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io;
use crate::lattice::{
    build_hessian, diagonalize, displacement_protocol, enforce_acoustic_sum_rule, DisplacementForceSet,
    PhononModes, ToyForceField, ToyParams, DEFAULT_DISPLACEMENT_STEP,
};
use crate::spin::DTensor;
use crate::structure::{
    build_monolayer, build_stacked, make_vacancy, DefectRecord, Species, Stacking, Supercell,
    DEFAULT_INTERLAYER_DISTANCE, DEFAULT_LATTICE_CONSTANT,
};
use crate::units::{CODATA_2018, FREE_ELECTRON_G};
use crate::zfs::{
    diagonalize_dtensor, dipolar_dtensor_with, displace_along_mode, SpinSite, ZfsSample, ZfsSampleSet,
    DEFAULT_DERIVATIVE_STEP,
};

pub const MIN_CELL_SIZE: usize = 4;

pub const FORCESET_FILE: &str = "forceset.json";
pub const ZFS_SAMPLES_FILE: &str = "zfs_samples.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Monolayer,
    AaPrime,
    Abc,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Monolayer, Variant::AaPrime, Variant::Abc];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Monolayer => "monolayer",
            Variant::AaPrime => "aa_prime",
            Variant::Abc => "abc",
        }
    }

    /// Converged equilibrium D of the matching host, GHz.
    pub fn target_d(self) -> f64 {
        match self {
            Variant::Monolayer => 2.74,
            Variant::AaPrime => 2.84,
            Variant::Abc => 2.88,
        }
    }

    pub fn default_enhancement(self) -> f64 {
        match self {
            Variant::AaPrime => 1.5,
            _ => 1.0,
        }
    }

    pub fn stacking(self) -> Option<Stacking> {
        match self {
            Variant::Monolayer => None,
            Variant::AaPrime => Some(Stacking::AAprime),
            Variant::Abc => Some(Stacking::Abc),
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "monolayer" | "mono" => Ok(Variant::Monolayer),
            "aa_prime" | "aaprime" | "aa'" | "hbn" => Ok(Variant::AaPrime),
            "abc" | "rbn" => Ok(Variant::Abc),
            _ => Err(Error::validation(format!(
                "unknown variant {s:?} (expected monolayer, aa_prime or abc)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyGenParams {
    pub toy: ToyParams,
    /// Å
    pub displacement_step: f64,
    /// Å·√amu
    pub derivative_step: f64,
    /// Multiplier on N-site displacements seen by the dipolar model.
    /// None picks the variant default.
    pub enhancement: Option<f64>,
    /// Equilibrium D the dipolar scale is calibrated to, GHz. None picks the
    /// variant default.
    pub target_d: Option<f64>,
    /// Standard deviation of Gaussian noise added to every force, eV/Å.
    pub force_noise: f64,
    pub seed: u64,
    pub g_factor: f64,
}

impl Default for ToyGenParams {
    fn default() -> Self {
        ToyGenParams {
            toy: ToyParams::default(),
            displacement_step: DEFAULT_DISPLACEMENT_STEP,
            derivative_step: DEFAULT_DERIVATIVE_STEP,
            enhancement: None,
            target_d: None,
            force_noise: 0.0,
            seed: 0,
            g_factor: FREE_ELECTRON_G,
        }
    }
}

impl ToyGenParams {
    pub fn validate(&self) -> Result<()> {
        self.toy.validate()?;
        for (name, v) in [
            ("displacement_step", self.displacement_step),
            ("derivative_step", self.derivative_step),
            ("g_factor", self.g_factor),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::validation(format!("{name} must be positive, got {v}")));
            }
        }
        if let Some(e) = self.enhancement {
            if !(e > 0.0) || !e.is_finite() {
                return Err(Error::validation(format!("enhancement must be positive, got {e}")));
            }
        }
        if let Some(d) = self.target_d {
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::validation(format!("target D must be positive, got {d}")));
            }
        }
        if !(self.force_noise >= 0.0) || !self.force_noise.is_finite() {
            return Err(Error::validation(format!("force noise must be non-negative, got {}", self.force_noise)));
        }
        Ok(())
    }
}

/// Defective supercell of the variant: n×n in-plane, vacancy on the central
/// boron of the bottom layer.
pub fn defect_cell(variant: Variant, n: usize) -> Result<(Supercell, DefectRecord)> {
    if n < MIN_CELL_SIZE {
        return Err(Error::validation(format!(
            "supercell size n = {n} is too small; need n >= {MIN_CELL_SIZE}"
        )));
    }
    let pristine = match variant.stacking() {
        None => build_monolayer(n, n, DEFAULT_LATTICE_CONSTANT)?,
        Some(s) => build_stacked(n, n, 2, s, DEFAULT_INTERLAYER_DISTANCE)?,
    };
    let site = pristine
        .central_site(Species::B, 0)
        .ok_or_else(|| Error::validation("cell has no boron in layer 0"))?;
    make_vacancy(&pristine, site)
}

/// Point-dipole model of the vacancy spin: weights ⅓ on the three N sites,
/// whose offsets from their equilibrium positions are multiplied by
/// `enhancement`.
#[derive(Debug, Clone, PartialEq)]
pub struct DefectSpinModel {
    pub defect: DefectRecord,
    pub equilibrium: [Vector3<f64>; 3],
    pub enhancement: f64,
    pub scale: f64,
    /// GHz·Å³
    pub prefactor: f64,
}

impl DefectSpinModel {
    /// Unit-scale model for `cell`, which must be the equilibrium geometry.
    pub fn new(cell: &Supercell, defect: &DefectRecord, enhancement: f64, g_factor: f64) -> Self {
        DefectSpinModel {
            defect: defect.clone(),
            equilibrium: defect.neighbor_positions(cell),
            enhancement,
            scale: 1.0,
            prefactor: CODATA_2018.dipolar_for_g(g_factor),
        }
    }

    pub fn sites(&self, cell: &Supercell) -> [SpinSite; 3] {
        let now = self.defect.neighbor_positions(cell);
        std::array::from_fn(|k| SpinSite {
            position: self.equilibrium[k] + (now[k] - self.equilibrium[k]) * self.enhancement,
            weight: 1.0 / 3.0,
        })
    }

    pub fn dtensor(&self, cell: &Supercell) -> Result<DTensor> {
        dipolar_dtensor_with(&self.sites(cell), self.scale, self.prefactor)
    }
}

/// Dipolar scale that makes the equilibrium D of `variant` equal `target_d`.
pub fn calibrate_dipolar_scale(variant: Variant, n: usize, target_d: f64, g_factor: f64) -> Result<f64> {
    let (cell, defect) = defect_cell(variant, n)?;
    let model = DefectSpinModel::new(&cell, &defect, 1.0, g_factor);
    scale_for(&model, &cell, target_d)
}

fn scale_for(model: &DefectSpinModel, cell: &Supercell, target_d: f64) -> Result<f64> {
    if !(target_d > 0.0) || !target_d.is_finite() {
        return Err(Error::validation(format!("target D must be positive, got {target_d}")));
    }
    let unit = DefectSpinModel { scale: 1.0, ..model.clone() };
    let d0 = diagonalize_dtensor(&unit.dtensor(cell)?).d;
    if d0.abs() < 1e-12 {
        return Err(Error::Computation("unscaled dipolar D vanishes; cannot calibrate".into()));
    }
    Ok(target_d / d0)
}

/// Everything generated for one case.
#[derive(Debug, Clone)]
pub struct ToyCase {
    pub variant: Variant,
    pub n: usize,
    pub params: ToyGenParams,
    pub cell: Supercell,
    pub defect: DefectRecord,
    pub forceset: DisplacementForceSet,
    pub modes: PhononModes,
    pub spin: DefectSpinModel,
    pub samples: ZfsSampleSet,
}

impl ToyCase {
    pub fn enhancement(&self) -> f64 {
        self.spin.enhancement
    }

    pub fn equilibrium_d(&self) -> f64 {
        self.samples.samples.first().map(|s| diagonalize_dtensor(&s.center).d).unwrap_or(0.0)
    }
}

/// Modes of a force set: Hessian from central differences, acoustic sum
/// rule, diagonalization.
pub fn modes_from_forceset(set: &DisplacementForceSet) -> Result<PhononModes> {
    let h = enforce_acoustic_sum_rule(&build_hessian(set)?);
    diagonalize(&h)
}

pub fn generate_case(variant: Variant, n: usize, params: &ToyGenParams) -> Result<ToyCase> {
    params.validate()?;
    let (cell, defect) = defect_cell(variant, n)?;
    let ff = ToyForceField::new(&cell, params.toy)?;
    let mut forceset = displacement_protocol(&cell, params.displacement_step, |c| ff.forces(c))?;
    if params.force_noise > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        let noise = Normal::new(0.0, params.force_noise).map_err(|e| Error::validation(e.to_string()))?;
        for r in &mut forceset.records {
            for f in &mut r.forces {
                for x in f.iter_mut() {
                    *x += noise.sample(&mut rng);
                }
            }
        }
    }
    let modes = modes_from_forceset(&forceset)?;

    let enhancement = params.enhancement.unwrap_or(variant.default_enhancement());
    let mut spin = DefectSpinModel::new(&cell, &defect, enhancement, params.g_factor);
    spin.scale = scale_for(&spin, &cell, params.target_d.unwrap_or(variant.target_d()))?;
    let center = spin.dtensor(&cell)?;

    let h = params.derivative_step;
    let samples = (0..modes.len())
        .map(|i| {
            let plus = spin.dtensor(&displace_along_mode(&cell, &modes, i, h, false)?)?;
            let minus = spin.dtensor(&displace_along_mode(&cell, &modes, i, -h, false)?)?;
            Ok(ZfsSample { mode: i, energy: modes.frequencies[i], center, plus, minus })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(ToyCase {
        variant,
        n,
        params: params.clone(),
        cell,
        defect,
        forceset,
        modes,
        spin,
        samples: ZfsSampleSet { step: h, samples },
    })
}

/// Write the force set and ZFS samples of a case into `dir`.
pub fn write_case(case: &ToyCase, dir: &Path) -> Result<Vec<PathBuf>> {
    let forceset = dir.join(FORCESET_FILE);
    let samples = dir.join(ZFS_SAMPLES_FILE);
    io::write_forceset(&case.forceset, &forceset)?;
    io::write_zfs_samples(&case.samples, &samples)?;
    Ok(vec![forceset, samples])
}
