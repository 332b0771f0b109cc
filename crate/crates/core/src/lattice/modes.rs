//! Normal modes from the mass-weighted Hessian.

use nalgebra::{DMatrix, DVector, SymmetricEigen, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::hessian::Hessian;
use crate::structure::{DefectRecord, Supercell};
use crate::units::CODATA_2018;

/// Modes with |ħω| below this are treated as translations, meV.
pub const ZERO_MODE_THRESHOLD: f64 = 0.05;

// couplings smaller than this (relative) split the Hessian into blocks
const BLOCK_COUPLING_TOLERANCE: f64 = 1e-13;

/// ħ·√(eV/(Å²·amu)) in meV.
pub fn mass_weighted_frequency_unit() -> f64 {
    (CODATA_2018.hbar2_per_amu_a2_mev * 1e3).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhononModes {
    /// |ħω| in meV, ordered by the signed eigenvalue (imaginary modes first).
    pub frequencies: Vec<f64>,
    pub imaginary: Vec<bool>,
    /// Orthonormal mass-weighted eigenvectors, one length-3N vector per mode.
    pub vectors: Vec<Vec<f64>>,
    /// amu
    pub masses: Vec<f64>,
}

impl PhononModes {
    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }

    pub fn is_zero_mode(&self, i: usize) -> bool {
        self.frequencies[i].abs() < ZERO_MODE_THRESHOLD
    }

    /// Modes that enter spectral sums: real and above the zero threshold.
    pub fn is_physical(&self, i: usize) -> bool {
        !self.imaginary[i] && !self.is_zero_mode(i)
    }

    pub fn zero_mode_count(&self) -> usize {
        (0..self.len()).filter(|&i| self.is_zero_mode(i)).count()
    }

    pub fn imaginary_count(&self) -> usize {
        self.imaginary.iter().filter(|&&b| b).count()
    }

    /// Mass-weighted eigenvector of mode `i` split per atom.
    pub fn atom_components(&self, i: usize) -> Vec<Vector3<f64>> {
        self.vectors[i].chunks(3).map(|c| Vector3::new(c[0], c[1], c[2])).collect()
    }

    /// Cartesian displacement pattern e_i/√m_i (Å per Å·√amu of normal coordinate).
    pub fn cartesian_pattern(&self, i: usize) -> Vec<Vector3<f64>> {
        self.atom_components(i)
            .into_iter()
            .zip(&self.masses)
            .map(|(e, m)| e / m.sqrt())
            .collect()
    }

    pub fn vector_matrix(&self) -> DMatrix<f64> {
        let n = self.vectors.first().map_or(0, Vec::len);
        DMatrix::from_fn(n, self.len(), |r, c| self.vectors[c][r])
    }

    /// max |VᵀV − I|.
    pub fn orthonormality_error(&self) -> f64 {
        let v = self.vector_matrix();
        let g = v.transpose() * &v;
        (g - DMatrix::identity(self.len(), self.len())).amax()
    }
}

/// Diagonalize M^{-1/2} H M^{-1/2}. Decoupled blocks (e.g. in-plane and
/// out-of-plane motion of a flat sheet) are solved separately so that
/// accidental degeneracies never mix them.
pub fn diagonalize(h: &Hessian) -> Result<PhononModes> {
    let n3 = h.matrix.nrows();
    if n3 == 0 {
        return Err(Error::validation("empty Hessian"));
    }
    let inv_sqrt_m: Vec<f64> = (0..n3).map(|k| 1.0 / h.masses[k / 3].sqrt()).collect();
    let mw = DMatrix::from_fn(n3, n3, |r, c| h.matrix[(r, c)] * inv_sqrt_m[r] * inv_sqrt_m[c]);
    if mw.iter().any(|x| !x.is_finite()) {
        return Err(Error::Computation("mass-weighted Hessian has non-finite entries".into()));
    }
    let asym = (&mw - mw.transpose()).amax();
    let scale = mw.amax();
    if asym > 1e-8 * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::Computation(format!(
            "Hessian is not symmetric (max asymmetry {asym:.3e}, max entry {scale:.3e})"
        )));
    }

    let mut eig: Vec<(f64, DVector<f64>)> = Vec::with_capacity(n3);
    for block in coupled_blocks(&mw, BLOCK_COUPLING_TOLERANCE * scale) {
        let sub = DMatrix::from_fn(block.len(), block.len(), |r, c| mw[(block[r], block[c])]);
        let se = SymmetricEigen::try_new(sub, f64::EPSILON, 0).ok_or_else(|| {
            Error::Computation(format!(
                "symmetric eigensolver did not converge on a {}-dimensional block (max entry {scale:.3e})",
                block.len()
            ))
        })?;
        for k in 0..block.len() {
            let mut v = DVector::zeros(n3);
            for (r, &dof) in block.iter().enumerate() {
                v[dof] = se.eigenvectors[(r, k)];
            }
            eig.push((se.eigenvalues[k], v));
        }
    }
    eig.sort_by(|a, b| a.0.total_cmp(&b.0));

    let unit = mass_weighted_frequency_unit();
    let mut frequencies = Vec::with_capacity(n3);
    let mut imaginary = Vec::with_capacity(n3);
    let mut vectors = Vec::with_capacity(n3);
    for (lambda, mut v) in eig {
        let hw = unit * lambda.abs().sqrt();
        frequencies.push(hw);
        imaginary.push(lambda < 0.0 && hw >= ZERO_MODE_THRESHOLD);
        fix_sign(&mut v);
        vectors.push(v.iter().copied().collect());
    }
    Ok(PhononModes { frequencies, imaginary, vectors, masses: h.masses.clone() })
}

/// Connected components of the coupling graph over degrees of freedom.
fn coupled_blocks(m: &DMatrix<f64>, tol: f64) -> Vec<Vec<usize>> {
    let n = m.nrows();
    let mut label = vec![usize::MAX; n];
    let mut blocks = Vec::new();
    for start in 0..n {
        if label[start] != usize::MAX {
            continue;
        }
        let id = blocks.len();
        let mut stack = vec![start];
        let mut members = Vec::new();
        label[start] = id;
        while let Some(k) = stack.pop() {
            members.push(k);
            for j in 0..n {
                if label[j] == usize::MAX && (m[(k, j)].abs() > tol || m[(j, k)].abs() > tol) {
                    label[j] = id;
                    stack.push(j);
                }
            }
        }
        members.sort_unstable();
        blocks.push(members);
    }
    blocks
}

// first clearly nonzero component positive
fn fix_sign(v: &mut DVector<f64>) {
    let amax = v.amax();
    if let Some(first) = v.iter().find(|x| x.abs() > 1e-6 * amax) {
        if *first < 0.0 {
            v.neg_mut();
        }
    }
}

/// Diagnostics describing where and how a mode moves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeCharacter {
    /// Σ z-components² / Σ all components² of the mass-weighted vector.
    pub out_of_plane_fraction: f64,
    /// Inverse participation ratio Σ_a p_a² of the per-atom weights p_a.
    pub localization_ipr: f64,
    /// Real-space amplitudes of the three vacancy neighbors, divided by the
    /// reference amplitude (or by their own maximum when none is given).
    pub neighbor_amplitude: [f64; 3],
    /// Σ of per-atom weights p_a over the three neighbors.
    pub neighbor_weight: f64,
}

pub fn atom_weights(modes: &PhononModes, i: usize) -> Vec<f64> {
    modes.atom_components(i).iter().map(|e| e.norm_squared()).collect()
}

pub fn out_of_plane_fraction(modes: &PhononModes, i: usize) -> f64 {
    let comps = modes.atom_components(i);
    let total: f64 = comps.iter().map(|e| e.norm_squared()).sum();
    let z: f64 = comps.iter().map(|e| e.z * e.z).sum();
    if total > 0.0 {
        z / total
    } else {
        0.0
    }
}

pub fn inverse_participation_ratio(modes: &PhononModes, i: usize) -> f64 {
    let w = atom_weights(modes, i);
    let total: f64 = w.iter().sum();
    w.iter().map(|p| (p / total).powi(2)).sum()
}

/// Characterize mode `i` relative to a vacancy. `reference_amplitude`, when
/// given, is the neighbor amplitude of the monolayer reference mode.
pub fn mode_character(
    modes: &PhononModes,
    i: usize,
    defect: &DefectRecord,
    reference_amplitude: Option<f64>,
) -> Result<ModeCharacter> {
    if i >= modes.len() {
        return Err(Error::validation(format!("mode index {i} out of range ({} modes)", modes.len())));
    }
    let pattern = modes.cartesian_pattern(i);
    let weights = atom_weights(modes, i);
    let amps = defect.neighbors.map(|k| pattern[k].norm());
    let norm = reference_amplitude.unwrap_or_else(|| amps.iter().cloned().fold(0.0, f64::max));
    let neighbor_amplitude = if norm > 0.0 { amps.map(|a| a / norm) } else { [0.0; 3] };
    Ok(ModeCharacter {
        out_of_plane_fraction: out_of_plane_fraction(modes, i),
        localization_ipr: inverse_participation_ratio(modes, i),
        neighbor_amplitude,
        neighbor_weight: defect.neighbors.iter().map(|&k| weights[k]).sum(),
    })
}

// modes closer than this are treated as one degenerate multiplet, meV
const DEGENERACY_TOLERANCE: f64 = 1e-6;

/// Indices of the modes degenerate with mode `i` (including `i`).
pub fn multiplet(modes: &PhononModes, i: usize) -> Vec<usize> {
    (0..modes.len())
        .filter(|&k| {
            modes.imaginary[k] == modes.imaginary[i]
                && (modes.frequencies[k] - modes.frequencies[i]).abs() < DEGENERACY_TOLERANCE
        })
        .collect()
}

/// Per-atom weights summed over the degenerate multiplet of mode `i`,
/// normalized to one. Unlike single-mode weights these do not depend on how
/// the solver happened to rotate a degenerate pair.
pub fn multiplet_weights(modes: &PhononModes, i: usize) -> Vec<f64> {
    let members = multiplet(modes, i);
    let mut w = vec![0.0; modes.masses.len()];
    for &k in &members {
        for (acc, p) in w.iter_mut().zip(atom_weights(modes, k)) {
            *acc += p;
        }
    }
    let scale = members.len() as f64;
    w.iter_mut().for_each(|p| *p /= scale);
    w
}

/// Physical mode with the largest out-of-plane fraction × neighbor weight
/// (multiplet-summed): the vibration localized on the vacancy's
/// dangling-bond sites. Ties go to the lower mode index.
pub fn defect_localized_mode(modes: &PhononModes, defect: &DefectRecord, max_energy: f64) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for i in 0..modes.len() {
        if !modes.is_physical(i) || modes.frequencies[i] > max_energy {
            continue;
        }
        let w = multiplet_weights(modes, i);
        let score = out_of_plane_fraction(modes, i) * defect.neighbors.iter().map(|&k| w[k]).sum::<f64>();
        match best {
            Some((_, s)) if score <= s * (1.0 + 1e-9) => {}
            _ => best = Some((i, score)),
        }
    }
    best.map(|(i, _)| i)
}

/// Cell displaced along mode `i` by `amount` Å·√amu.
pub fn displace_cell(cell: &Supercell, modes: &PhononModes, i: usize, amount: f64) -> Supercell {
    let pattern: Vec<Vector3<f64>> = modes.cartesian_pattern(i).into_iter().map(|v| v * amount).collect();
    cell.displaced(&pattern)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::forcefield::{ToyForceField, ToyParams};
    use crate::lattice::hessian::{build_hessian, displacement_protocol, enforce_acoustic_sum_rule};
    use crate::structure::{build_monolayer, make_vacancy, Species};
    use approx::assert_relative_eq;

    #[test]
    fn diatomic_closed_form() {
        let k = 1.0;
        let (m1, m2) = (10.811, 14.007);
        let mut h = DMatrix::zeros(6, 6);
        h[(0, 0)] = k;
        h[(3, 3)] = k;
        h[(0, 3)] = -k;
        h[(3, 0)] = -k;
        let modes = diagonalize(&Hessian::new(h, vec![m1, m2]).unwrap()).unwrap();
        let mu = m1 * m2 / (m1 + m2);
        let expected = mass_weighted_frequency_unit() * (k / mu).sqrt();
        assert_relative_eq!(*modes.frequencies.last().unwrap(), expected, max_relative = 1e-12);
        // ħ·√(k/μ) from SI: ħ = 1.054571817e-34, eV = 1.602176634e-19, amu = 1.66053906660e-27
        let si = 1.054_571_817e-34 * (1.602_176_634e-19 / 1e-20 / (mu * 1.660_539_066_60e-27)).sqrt()
            / 1.602_176_634e-22;
        assert_relative_eq!(expected, si, max_relative = 1e-9);
        assert_eq!(modes.zero_mode_count(), 5);
    }

    fn toy_monolayer_modes(n: usize) -> (Supercell, PhononModes) {
        let cell = build_monolayer(n, n, 2.51).unwrap();
        let ff = ToyForceField::new(&cell, ToyParams::default()).unwrap();
        let set = displacement_protocol(&cell, 0.01, |c| ff.forces(c)).unwrap();
        let h = enforce_acoustic_sum_rule(&build_hessian(&set).unwrap());
        (cell, diagonalize(&h).unwrap())
    }

    #[test]
    fn monolayer_has_three_translations() {
        let (_, modes) = toy_monolayer_modes(6);
        assert_eq!(modes.zero_mode_count(), 3);
        assert_eq!(modes.imaginary_count(), 0);
        assert!(modes.orthonormality_error() < 1e-8);
        let physical: Vec<f64> = (0..modes.len()).filter(|&i| modes.is_physical(i)).map(|i| modes.frequencies[i]).collect();
        assert!(physical.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn uniform_translation_character() {
        let n = 4;
        let mut v = vec![0.0; 3 * n];
        for i in 0..n {
            v[3 * i + 2] = 0.5;
        }
        let modes = PhononModes {
            frequencies: vec![0.0],
            imaginary: vec![false],
            vectors: vec![v],
            masses: vec![1.0; n],
        };
        assert_relative_eq!(out_of_plane_fraction(&modes, 0), 1.0);
        assert_relative_eq!(inverse_participation_ratio(&modes, 0), 1.0 / n as f64);
        let mut w = vec![0.0; 3 * n];
        w[0] = 0.6;
        w[4] = 0.8;
        let modes = PhononModes { vectors: vec![w], ..modes };
        assert_eq!(out_of_plane_fraction(&modes, 0), 0.0);
    }

    #[test]
    fn vacancy_mode_concentrates_on_neighbours() {
        for n in [5, 6, 7] {
            let cell = build_monolayer(n, n, 2.51).unwrap();
            let (cell, defect) = make_vacancy(&cell, cell.central_site(Species::B, 0).unwrap()).unwrap();
            let ff = ToyForceField::new(&cell, ToyParams::default()).unwrap();
            let set = displacement_protocol(&cell, 0.01, |c| ff.forces(c)).unwrap();
            let modes = diagonalize(&enforce_acoustic_sum_rule(&build_hessian(&set).unwrap())).unwrap();
            assert_eq!(modes.zero_mode_count(), 3);

            let i = defect_localized_mode(&modes, &defect, 40.0).unwrap();
            let w = multiplet_weights(&modes, i);
            let mut order: Vec<usize> = (0..w.len()).collect();
            order.sort_by(|&a, &b| w[b].total_cmp(&w[a]));
            let mut top = order[..3].to_vec();
            top.sort_unstable();
            let mut nb = defect.neighbors.to_vec();
            nb.sort_unstable();
            assert_eq!(top, nb, "n = {n}");
            let ch = mode_character(&modes, i, &defect, None).unwrap();
            assert!(ch.out_of_plane_fraction > 0.9);
            assert!(ch.neighbor_weight > 3.0 / cell.len() as f64);
            assert_relative_eq!(ch.neighbor_amplitude.iter().cloned().fold(0.0, f64::max), 1.0);
            assert!(mode_character(&modes, 10_000, &defect, None).is_err());
        }
    }
}
