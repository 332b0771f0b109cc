//! Zero-field-splitting analysis: D/E constants, the point-dipole toy model
//! and D-tensor derivatives along phonon normal coordinates.

use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::modes::PhononModes;
use crate::spin::DTensor;
use crate::structure::Supercell;
use crate::units::{dimensionless_first_derivative, dimensionless_second_derivative, CODATA_2018};

/// Default normal-coordinate step for D-tensor sampling, Å·√amu.
pub const DEFAULT_DERIVATIVE_STEP: f64 = 0.1;

/// Largest mode displacement accepted without `force`, Å·√amu.
pub const MAX_MODE_DISPLACEMENT: f64 = 1.0;

/// D and E constants with the principal frame they were read in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZfsSummary {
    /// GHz
    pub d: f64,
    /// GHz, never negative.
    pub e: f64,
    /// Principal values (λx, λy, λz), GHz.
    pub principal_values: [f64; 3],
    /// Rows are the unit x, y, z principal axes.
    pub principal_axes: [[f64; 3]; 3],
}

/// Diagonalize a D-tensor. z is the axis of largest |λ| (the larger λ wins
/// an exact tie), x and y are ordered so that λx ≥ λy. D = 3λz/2 and
/// E = (λx − λy)/2.
pub fn diagonalize_dtensor(d: &DTensor) -> ZfsSummary {
    let m = d.components();
    let norm = m.norm();
    if norm == 0.0 {
        return ZfsSummary {
            d: 0.0,
            e: 0.0,
            principal_values: [0.0; 3],
            principal_axes: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        };
    }
    let eig = SymmetricEigen::new(*m);
    let tie = 1e-12 * norm;
    let mut z = 0;
    for k in 1..3 {
        let (a, b) = (eig.eigenvalues[k].abs(), eig.eigenvalues[z].abs());
        if a > b + tie || ((a - b).abs() <= tie && eig.eigenvalues[k] > eig.eigenvalues[z]) {
            z = k;
        }
    }
    let mut rest: Vec<usize> = (0..3).filter(|&k| k != z).collect();
    if eig.eigenvalues[rest[1]] > eig.eigenvalues[rest[0]] {
        rest.swap(0, 1);
    }
    let (x, y) = (rest[0], rest[1]);
    let axis = |k: usize| -> Vector3<f64> { eig.eigenvectors.column(k).into_owned() };
    let ax = canonical_sign(axis(x));
    let az = canonical_sign(axis(z));
    // right-handed frame
    let ay = az.cross(&ax);
    let lx = eig.eigenvalues[x];
    let ly = eig.eigenvalues[y];
    let lz = eig.eigenvalues[z];
    ZfsSummary {
        d: 1.5 * lz,
        e: 0.5 * (lx - ly),
        principal_values: [lx, ly, lz],
        principal_axes: [ax.into(), ay.into(), az.into()],
    }
}

fn canonical_sign(v: Vector3<f64>) -> Vector3<f64> {
    let k = v.iamax();
    if v[k] < 0.0 {
        -v
    } else {
        v
    }
}

/// One row of the supercell-convergence table of computed D constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReferenceZfs {
    pub host: &'static str,
    pub supercell: [usize; 3],
    /// GHz
    pub d: f64,
}

const fn entry(host: &'static str, n: usize, layers: usize, d: f64) -> ReferenceZfs {
    ReferenceZfs { host, supercell: [n, n, layers], d }
}

/// Semilocal-functional D constants of the negatively charged boron vacancy
/// versus supercell size.
pub const SUPERCELL_CONVERGENCE: [ReferenceZfs; 18] = [
    entry("monolayer", 5, 1, 2.92),
    entry("monolayer", 6, 1, 2.83),
    entry("monolayer", 7, 1, 2.79),
    entry("monolayer", 9, 1, 2.75),
    entry("monolayer", 11, 1, 2.74),
    entry("monolayer", 12, 1, 2.74),
    entry("hBN", 5, 1, 2.64),
    entry("hBN", 6, 1, 2.56),
    entry("hBN", 7, 1, 2.52),
    entry("hBN", 9, 1, 2.48),
    entry("hBN", 6, 2, 2.84),
    entry("hBN", 6, 3, 2.89),
    entry("rBN", 5, 1, 2.83),
    entry("rBN", 6, 1, 2.77),
    entry("rBN", 7, 1, 2.73),
    entry("rBN", 9, 1, 2.70),
    entry("rBN", 6, 2, 2.88),
    entry("rBN", 6, 3, 2.91),
];

/// Hybrid-functional, spin-decontaminated D constants for 9×9×1 cells, GHz.
pub const HYBRID_REFERENCE: [(&str, f64); 2] = [("hBN", 3.19), ("rBN", 3.44)];

pub fn reference_zfs(host: &str, supercell: [usize; 3]) -> Option<f64> {
    SUPERCELL_CONVERGENCE
        .iter()
        .find(|r| r.host.eq_ignore_ascii_case(host) && r.supercell == supercell)
        .map(|r| r.d)
}

/// A point carrying a share of the spin density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinSite {
    /// Å
    pub position: Vector3<f64>,
    pub weight: f64,
}

// closer sites are rejected as coincident, Å
const MIN_SITE_SEPARATION: f64 = 0.1;

/// Point-dipole D-tensor with the free-electron g-factor.
pub fn dipolar_dtensor(sites: &[SpinSite], scale: f64) -> Result<DTensor> {
    dipolar_dtensor_with(sites, scale, CODATA_2018.dipolar_ghz_a3)
}

/// D_ab = scale·C·Σ_{i<j} w_i w_j (r²δ_ab − 3 r_a r_b)/r⁵ with prefactor C in GHz·Å³.
pub fn dipolar_dtensor_with(sites: &[SpinSite], scale: f64, prefactor: f64) -> Result<DTensor> {
    if sites.len() < 2 {
        return Err(Error::validation(format!("dipolar model needs at least 2 sites, got {}", sites.len())));
    }
    let total: f64 = sites.iter().map(|s| s.weight).sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::validation(format!("spin weights must sum to 1, got {total}")));
    }
    if !scale.is_finite() {
        return Err(Error::validation("dipolar scale must be finite"));
    }
    let mut m = Matrix3::zeros();
    for i in 0..sites.len() {
        for j in (i + 1)..sites.len() {
            let r = sites[j].position - sites[i].position;
            let r2 = r.norm_squared();
            if r2.sqrt() < MIN_SITE_SEPARATION {
                return Err(Error::validation(format!(
                    "spin sites {i} and {j} coincide ({:.3e} Å apart)",
                    r2.sqrt()
                )));
            }
            let r5 = r2 * r2 * r2.sqrt();
            let w = sites[i].weight * sites[j].weight / r5;
            m += (Matrix3::identity() * r2 - r * r.transpose() * 3.0) * w;
        }
    }
    let m = m * (scale * prefactor);
    // exact symmetry: r rᵀ is symmetric term by term, but keep it explicit
    Ok(DTensor::symmetrized(m).0)
}

/// Displace every atom by amount·e_i/√m_i along mode `mode`.
pub fn displace_along_mode(
    cell: &Supercell,
    modes: &PhononModes,
    mode: usize,
    amount: f64,
    force: bool,
) -> Result<Supercell> {
    if mode >= modes.len() {
        return Err(Error::validation(format!("mode index {mode} out of range ({} modes)", modes.len())));
    }
    if modes.masses.len() != cell.len() {
        return Err(Error::validation(format!(
            "modes describe {} atoms, cell has {}",
            modes.masses.len(),
            cell.len()
        )));
    }
    if !amount.is_finite() || (amount.abs() > MAX_MODE_DISPLACEMENT && !force) {
        return Err(Error::validation(format!(
            "mode displacement {amount} Å·√amu exceeds the harmonic guard of {MAX_MODE_DISPLACEMENT}"
        )));
    }
    let pattern: Vec<Vector3<f64>> = modes.cartesian_pattern(mode).into_iter().map(|v| v * amount).collect();
    Ok(cell.displaced(&pattern))
}

/// D(0), D(+Δ), D(−Δ) for one mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZfsSample {
    pub mode: usize,
    /// meV
    pub energy: f64,
    pub center: DTensor,
    pub plus: DTensor,
    pub minus: DTensor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZfsSampleSet {
    /// Å·√amu
    pub step: f64,
    pub samples: Vec<ZfsSample>,
}

impl ZfsSampleSet {
    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0) || !self.step.is_finite() {
            return Err(Error::validation(format!("derivative step must be positive, got {}", self.step)));
        }
        let mut seen = std::collections::BTreeSet::new();
        for s in &self.samples {
            if !seen.insert(s.mode) {
                return Err(Error::validation(format!("mode {} sampled twice", s.mode)));
            }
        }
        Ok(())
    }
}

/// Symmetry of a mode under the defect's threefold axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrigonalSymmetry {
    A1,
    E,
}

/// Classify a first-derivative tensor: a₁ modes change only the axial part
/// (zz and xx + yy), e modes only the rest. None when the tensor is too small
/// or mixed to tell.
pub fn trigonal_label(first: &Matrix3<f64>, reference_scale: f64) -> Option<TrigonalSymmetry> {
    let axial = (first[(2, 2)].powi(2) + (0.5 * (first[(0, 0)] + first[(1, 1)])).powi(2)).sqrt();
    let other = ((0.5 * (first[(0, 0)] - first[(1, 1)])).powi(2)
        + first[(0, 1)].powi(2)
        + first[(0, 2)].powi(2)
        + first[(1, 2)].powi(2))
    .sqrt();
    let big = axial.max(other);
    if big <= 1e-8 * reference_scale {
        return None;
    }
    if other <= 1e-6 * big {
        Some(TrigonalSymmetry::A1)
    } else if axial <= 1e-6 * big {
        Some(TrigonalSymmetry::E)
    } else {
        None
    }
}

/// Derivatives of D along one normal coordinate in the dimensionless convention.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeDerivative {
    pub mode: usize,
    /// meV
    pub energy: f64,
    /// ∂D/∂q, GHz.
    pub first: DTensor,
    /// ∂²D/∂q², GHz.
    pub second: DTensor,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symmetry: Option<TrigonalSymmetry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DTensorDerivatives {
    /// Å·√amu
    pub step: f64,
    /// Modes above this energy were dropped, meV.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cutoff: Option<f64>,
    /// D(0) of the first sample.
    pub equilibrium: DTensor,
    pub modes: Vec<ModeDerivative>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// Central finite differences in mass-weighted coordinates, converted to
/// the dimensionless convention with each mode's energy.
pub fn extract_derivatives(
    samples: &ZfsSampleSet,
    modes: &PhononModes,
    cutoff: Option<f64>,
) -> Result<DTensorDerivatives> {
    samples.validate()?;
    let first = samples
        .samples
        .first()
        .ok_or_else(|| Error::MissingRecord("sample set contains no modes".into()))?;
    let h = samples.step;
    let mut warnings = Vec::new();
    let mut selected = Vec::new();
    let mut zero = Vec::new();
    for s in &samples.samples {
        if s.mode >= modes.len() {
            return Err(Error::validation(format!(
                "sample refers to mode {} but only {} modes exist",
                s.mode,
                modes.len()
            )));
        }
        let hw = modes.frequencies[s.mode];
        if (hw - s.energy).abs() > 1e-6 * hw.max(1.0) {
            return Err(Error::validation(format!(
                "mode {}: sample energy {} meV does not match mode energy {hw} meV",
                s.mode, s.energy
            )));
        }
        if !modes.is_physical(s.mode) {
            if modes.imaginary[s.mode] {
                warnings.push(format!("mode {} skipped: imaginary ({hw:.4} meV)", s.mode));
            } else {
                zero.push(s.mode.to_string());
            }
            continue;
        }
        if cutoff.is_some_and(|c| hw > c) {
            continue;
        }
        selected.push(*s);
    }
    if !zero.is_empty() {
        warnings.insert(0, format!("zero-frequency modes skipped: {}", zero.join(", ")));
    }
    let scale = first.center.norm().max(f64::MIN_POSITIVE);
    let derivs = selected
        .par_iter()
        .map(|s| {
            let (p, c, m) = (s.plus.components(), s.center.components(), s.minus.components());
            let d1 = (p - m) / (2.0 * h);
            let d2 = (p - c * 2.0 + m) / (h * h);
            let first = dimensionless_first_derivative(&d1, s.energy)?;
            let second = dimensionless_second_derivative(&d2, s.energy)?;
            Ok(ModeDerivative {
                mode: s.mode,
                energy: s.energy,
                first: DTensor::symmetrized(first).0,
                second: DTensor::symmetrized(second).0,
                symmetry: trigonal_label(&d1, scale),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DTensorDerivatives { step: h, cutoff, equilibrium: first.center, modes: derivs, warnings })
}
