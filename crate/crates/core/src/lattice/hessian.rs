//! Finite-displacement force data and the Hessian built from it.

use std::collections::HashMap;
use std::fmt;

use nalgebra::{DMatrix, Matrix3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::structure::Supercell;

/// Default Cartesian displacement for the finite-difference Hessian, Å.
pub const DEFAULT_DISPLACEMENT_STEP: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Axis {
    #[serde(rename = "x")]
    X,
    #[serde(rename = "y")]
    Y,
    #[serde(rename = "z")]
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(["x", "y", "z"][self.index()])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl Sign {
    pub fn factor(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Plus => "+",
            Sign::Minus => "-",
        })
    }
}

/// Forces on every atom after displacing one atom along one axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisplacementRecord {
    pub atom: usize,
    pub axis: Axis,
    pub sign: Sign,
    /// eV/Å, one row per atom
    pub forces: Vec<[f64; 3]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisplacementForceSet {
    pub reference: Supercell,
    /// Å
    pub step: f64,
    pub records: Vec<DisplacementRecord>,
}

impl DisplacementForceSet {
    /// Check the set is complete: positive step, matching force arrays and
    /// both signs for every (atom, axis).
    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0) {
            return Err(Error::validation(format!("displacement step must be positive, got {}", self.step)));
        }
        let n = self.reference.len();
        for r in &self.records {
            if r.atom >= n {
                return Err(Error::validation(format!(
                    "record for atom {} but the structure has {n} atoms",
                    r.atom
                )));
            }
            if r.forces.len() != n {
                return Err(Error::validation(format!(
                    "record (atom {}, {}, {}) has {} force rows, expected {n}",
                    r.atom,
                    r.axis,
                    r.sign,
                    r.forces.len()
                )));
            }
        }
        let missing = self.missing_records();
        if !missing.is_empty() {
            let list: Vec<String> =
                missing.iter().map(|(a, x, s)| format!("(atom {a}, {x}, {s})")).collect();
            return Err(Error::MissingRecord(format!("displacement records {}", list.join(", "))));
        }
        Ok(())
    }

    pub fn missing_records(&self) -> Vec<(usize, Axis, Sign)> {
        let have: std::collections::HashSet<_> =
            self.records.iter().map(|r| (r.atom, r.axis, r.sign)).collect();
        let mut out = Vec::new();
        for atom in 0..self.reference.len() {
            for axis in Axis::ALL {
                for sign in [Sign::Plus, Sign::Minus] {
                    if !have.contains(&(atom, axis, sign)) {
                        out.push((atom, axis, sign));
                    }
                }
            }
        }
        out
    }
}

/// Run the ±`step` displacement protocol on every atom and Cartesian axis,
/// collecting forces from `force_fn`. Records are ordered by (atom, axis, sign).
pub fn displacement_protocol<F>(reference: &Supercell, step: f64, force_fn: F) -> Result<DisplacementForceSet>
where
    F: Fn(&Supercell) -> Result<Vec<[f64; 3]>> + Sync,
{
    if !(step > 0.0) {
        return Err(Error::validation(format!("displacement step must be positive, got {step}")));
    }
    let jobs: Vec<(usize, Axis, Sign)> = (0..reference.len())
        .flat_map(|a| Axis::ALL.into_iter().flat_map(move |x| [(a, x, Sign::Plus), (a, x, Sign::Minus)]))
        .collect();
    let records = jobs
        .par_iter()
        .map(|&(atom, axis, sign)| {
            let mut cell = reference.clone();
            cell.atoms[atom].position[axis.index()] += sign.factor() * step;
            Ok(DisplacementRecord { atom, axis, sign, forces: force_fn(&cell)? })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DisplacementForceSet { reference: reference.clone(), step, records })
}

/// Force constants in eV/Å² together with the atomic masses.
#[derive(Debug, Clone, PartialEq)]
pub struct Hessian {
    pub matrix: DMatrix<f64>,
    /// amu
    pub masses: Vec<f64>,
    /// ‖H − Hᵀ‖/‖H‖ of the raw finite-difference matrix, before symmetrization.
    pub raw_asymmetry: f64,
}

impl Hessian {
    pub fn new(matrix: DMatrix<f64>, masses: Vec<f64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() || matrix.nrows() != 3 * masses.len() {
            return Err(Error::validation(format!(
                "Hessian is {}×{} but there are {} atoms",
                matrix.nrows(),
                matrix.ncols(),
                masses.len()
            )));
        }
        if masses.iter().any(|m| !(*m > 0.0)) {
            return Err(Error::validation("masses must be positive"));
        }
        Ok(Hessian { matrix, masses, raw_asymmetry: 0.0 })
    }

    pub fn atom_count(&self) -> usize {
        self.masses.len()
    }

    /// ‖H·t‖ summed over the three uniform translations.
    pub fn translation_residual(&self) -> f64 {
        let n = self.atom_count();
        (0..3)
            .map(|a| {
                let mut t = nalgebra::DVector::zeros(3 * n);
                for i in 0..n {
                    t[3 * i + a] = 1.0;
                }
                (&self.matrix * t).norm()
            })
            .sum()
    }

    pub fn block(&self, i: usize, j: usize) -> Matrix3<f64> {
        self.matrix.fixed_view::<3, 3>(3 * i, 3 * j).into_owned()
    }
}

/// Central-difference Hessian H[iα, jβ] = −(F_jβ(+Δ_iα) − F_jβ(−Δ_iα))/(2Δ),
/// symmetrized afterwards.
pub fn build_hessian(set: &DisplacementForceSet) -> Result<Hessian> {
    let n = set.reference.len();
    for r in &set.records {
        if r.atom >= n || r.forces.len() != n {
            set.validate()?;
        }
    }
    let index: HashMap<(usize, Axis, Sign), &DisplacementRecord> =
        set.records.iter().map(|r| ((r.atom, r.axis, r.sign), r)).collect();
    let lookup = |atom: usize, axis: Axis, sign: Sign| {
        index.get(&(atom, axis, sign)).copied().ok_or_else(|| {
            Error::MissingRecord(format!("displacement record (atom {atom}, {axis}, {sign})"))
        })
    };
    let rows: Vec<Vec<f64>> = (0..3 * n)
        .into_par_iter()
        .map(|row| {
            let atom = row / 3;
            let axis = Axis::ALL[row % 3];
            let plus = lookup(atom, axis, Sign::Plus)?;
            let minus = lookup(atom, axis, Sign::Minus)?;
            let mut out = vec![0.0; 3 * n];
            for j in 0..n {
                for b in 0..3 {
                    out[3 * j + b] = -(plus.forces[j][b] - minus.forces[j][b]) / (2.0 * set.step);
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let raw = DMatrix::from_fn(3 * n, 3 * n, |r, c| rows[r][c]);
    let norm = raw.norm();
    let raw_asymmetry = if norm > 0.0 { (&raw - raw.transpose()).norm() / norm } else { 0.0 };
    let matrix = (&raw + raw.transpose()) * 0.5;
    let mut h = Hessian::new(matrix, set.reference.masses())?;
    h.raw_asymmetry = raw_asymmetry;
    Ok(h)
}

/// Replace each diagonal 3×3 block by minus the (symmetrized) sum of the
/// off-diagonal blocks in its row. For any Hessian whose off-diagonal row
/// sums are symmetric, uniform translations become exact null vectors.
pub fn enforce_acoustic_sum_rule(h: &Hessian) -> Hessian {
    let n = h.atom_count();
    let mut out = h.clone();
    for i in 0..n {
        let mut s = Matrix3::<f64>::zeros();
        for j in 0..n {
            if j != i {
                s += h.block(i, j);
            }
        }
        let diag = -(s + s.transpose()) * 0.5;
        out.matrix.fixed_view_mut::<3, 3>(3 * i, 3 * i).copy_from(&diag);
    }
    out
}

/// Uniform translation vector along Cartesian `axis` for `n` atoms.
pub fn translation_vector(n: usize, axis: usize) -> nalgebra::DVector<f64> {
    let mut t = nalgebra::DVector::zeros(3 * n);
    for i in 0..n {
        t[3 * i + axis] = 1.0;
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::forcefield::{ToyForceField, ToyParams};
    use crate::structure::{build_monolayer, Atom, Species};

    fn two_atom_chain(k: f64) -> (Supercell, impl Fn(&Supercell) -> Result<Vec<[f64; 3]>> + Sync) {
        let cell = Supercell {
            lattice_vectors: [[30.0, 0.0, 0.0], [0.0, 30.0, 0.0], [0.0, 0.0, 30.0]],
            atoms: vec![
                Atom::new(Species::B, [0.0, 0.0, 0.0], 0),
                Atom::new(Species::N, [1.5, 0.0, 0.0], 0),
            ],
            periodic: [false, false, false],
        };
        let x0 = [0.0, 1.5];
        let f = move |c: &Supercell| {
            let u0 = c.atoms[0].position[0] - x0[0];
            let u1 = c.atoms[1].position[0] - x0[1];
            let f0 = k * (u1 - u0);
            Ok(vec![[f0, 0.0, 0.0], [-f0, 0.0, 0.0]])
        };
        (cell, f)
    }

    #[test]
    fn one_dimensional_spring() {
        let k = 2.5;
        let (cell, f) = two_atom_chain(k);
        let set = displacement_protocol(&cell, 0.01, f).unwrap();
        let h = build_hessian(&set).unwrap();
        let xx = |i: usize, j: usize| h.matrix[(3 * i, 3 * j)];
        assert!((xx(0, 0) - k).abs() < 1e-12);
        assert!((xx(1, 1) - k).abs() < 1e-12);
        assert!((xx(0, 1) + k).abs() < 1e-12);
        assert!((xx(1, 0) + k).abs() < 1e-12);
    }

    #[test]
    fn numerical_matches_analytic_spring_hessian() {
        let cell = build_monolayer(2, 2, 2.51).unwrap();
        let ff = ToyForceField::new(&cell, ToyParams::default()).unwrap();
        let set = displacement_protocol(&cell, 0.01, |c| ff.forces(c)).unwrap();
        let h = build_hessian(&set).unwrap();
        let exact = ff.analytic_hessian();
        assert!((&h.matrix - &exact).norm() / exact.norm() < 1e-6);
        assert!(h.raw_asymmetry < 1e-6);
    }

    #[test]
    fn missing_record_is_named() {
        let cell = build_monolayer(2, 2, 2.51).unwrap();
        let ff = ToyForceField::new(&cell, ToyParams::default()).unwrap();
        let mut set = displacement_protocol(&cell, 0.01, |c| ff.forces(c)).unwrap();
        set.records.retain(|r| !(r.atom == 3 && r.axis == Axis::Y && r.sign == Sign::Minus));
        let err = build_hessian(&set).unwrap_err().to_string();
        assert!(err.contains("atom 3, y, -"), "{err}");
        assert_eq!(set.missing_records(), vec![(3, Axis::Y, Sign::Minus)]);
        assert!(set.validate().is_err());
    }

    #[test]
    fn asr_leaves_exact_hessian_unchanged() {
        let cell = build_monolayer(2, 2, 2.51).unwrap();
        let ff = ToyForceField::new(&cell, ToyParams::default()).unwrap();
        let h = Hessian::new(ff.analytic_hessian(), cell.masses()).unwrap();
        let fixed = enforce_acoustic_sum_rule(&h);
        assert!((&fixed.matrix - &h.matrix).amax() < 1e-12);
    }

    #[test]
    fn asr_removes_diagonal_noise() {
        let cell = build_monolayer(2, 2, 2.51).unwrap();
        let ff = ToyForceField::new(&cell, ToyParams::default()).unwrap();
        let mut m = ff.analytic_hessian();
        for i in 0..cell.len() {
            for a in 0..3 {
                for b in 0..3 {
                    let noise = 1e-3 * (((i * 9 + a * 3 + b) as f64) * 0.7).sin();
                    m[(3 * i + a, 3 * i + b)] += noise;
                    if a != b {
                        m[(3 * i + b, 3 * i + a)] = m[(3 * i + a, 3 * i + b)];
                    }
                }
            }
        }
        let h = Hessian::new(m, cell.masses()).unwrap();
        assert!(h.translation_residual() > 1e-4);
        let fixed = enforce_acoustic_sum_rule(&h);
        assert!(fixed.translation_residual() < 1e-12);
    }

    #[test]
    fn asr_keeps_random_symmetric_matrix_symmetric() {
        let n = 4;
        let mut m = DMatrix::from_fn(3 * n, 3 * n, |r, c| ((r * 31 + c * 17) as f64 * 0.37).sin());
        m = &m + m.transpose();
        let h = Hessian::new(m, vec![1.0; n]).unwrap();
        let fixed = enforce_acoustic_sum_rule(&h);
        assert!((&fixed.matrix - fixed.matrix.transpose()).amax() < 1e-15);
    }

    #[test]
    fn hessian_assembly_is_thread_count_independent() {
        let cell = build_monolayer(3, 3, 2.51).unwrap();
        let ff = ToyForceField::new(&cell, ToyParams::default()).unwrap();
        let run = |threads| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            pool.install(|| {
                let set = displacement_protocol(&cell, 0.01, |c| ff.forces(c)).unwrap();
                build_hessian(&set).unwrap()
            })
        };
        let a = run(1);
        let b = run(4);
        assert!(a.matrix.iter().zip(b.matrix.iter()).all(|(x, y)| x.to_bits() == y.to_bits()));
    }
}
