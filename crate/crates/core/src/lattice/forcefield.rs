//! Harmonic spring model used as a stand-in for first-principles forces.
//!
//! Every intralayer nearest-neighbor bond carries a Born–von Kármán tensor
//! with a longitudinal stretch, an in-plane transverse term and an
//! out-of-plane bending term. Interlayer pairs get central springs: stiff
//! ones between vertically adjacent atoms and softer ones for the tilted
//! next shell, which is what resists layer sliding.
//!
//! The model is linear about its reference geometry, so central
//! differences of its forces reproduce the analytic Hessian exactly.

use nalgebra::{DMatrix, Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::structure::Supercell;

/// Spring constants in eV/Å² and neighbor cutoffs in Å.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToyParams {
    /// Longitudinal nearest-neighbor bond stretch.
    pub k_bond: f64,
    /// In-plane transverse stiffness of each bond.
    pub k_ti: f64,
    /// Out-of-plane bending stiffness of each bond.
    pub k_z: f64,
    /// Vertical interlayer springs between atoms sitting on top of each other.
    pub k_inter: f64,
    /// Central springs to the tilted interlayer shell.
    pub k_shear: f64,
    pub bond_cutoff: f64,
    pub interlayer_cutoff: f64,
}

impl Default for ToyParams {
    fn default() -> Self {
        ToyParams {
            k_bond: 6.0,
            k_ti: 4.0,
            k_z: 0.4,
            k_inter: 0.15,
            k_shear: 0.05,
            bond_cutoff: 1.7,
            interlayer_cutoff: 3.75,
        }
    }
}

impl ToyParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("k_bond", self.k_bond),
            ("k_ti", self.k_ti),
            ("k_z", self.k_z),
            ("k_inter", self.k_inter),
            ("k_shear", self.k_shear),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::validation(format!("{name} must be non-negative, got {v}")));
            }
        }
        if !(self.bond_cutoff > 0.0) || !(self.interlayer_cutoff > 0.0) {
            return Err(Error::validation("neighbor cutoffs must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpringKind {
    Bond,
    Vertical,
    Tilted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spring {
    pub i: usize,
    pub j: usize,
    pub kind: SpringKind,
    /// Reference vector from i to the bonded image of j.
    pub vector: Vector3<f64>,
    pub stiffness: Matrix3<f64>,
}

// lateral offsets below this count as "on top of each other"
const VERTICAL_TOLERANCE: f64 = 0.1;

/// Spring network built once from a reference cell.
#[derive(Debug, Clone)]
pub struct ToyForceField {
    reference: Vec<Vector3<f64>>,
    springs: Vec<Spring>,
    params: ToyParams,
}

impl ToyForceField {
    pub fn new(reference: &Supercell, params: ToyParams) -> Result<Self> {
        params.validate()?;
        let n = reference.len();
        let max_cut = params.bond_cutoff.max(params.interlayer_cutoff);
        let mut springs = Vec::new();
        for i in 0..n {
            for j in i..n {
                let (ai, aj) = (&reference.atoms[i], &reference.atoms[j]);
                let same_layer = ai.layer == aj.layer;
                let cutoff = if same_layer { params.bond_cutoff } else { params.interlayer_cutoff };
                if i != j {
                    let d = reference.min_image(&(aj.pos() - ai.pos())).norm();
                    if d > max_cut {
                        continue;
                    }
                }
                for v in reference.images_within(i, j, cutoff) {
                    let u = v / v.norm();
                    let (kind, k) = if same_layer {
                        let t = Vector3::z().cross(&u);
                        let t = if t.norm() > 0.0 { t / t.norm() } else { t };
                        let z = Vector3::z();
                        let k = u * u.transpose() * params.k_bond
                            + t * t.transpose() * params.k_ti
                            + z * z.transpose() * params.k_z;
                        (SpringKind::Bond, k)
                    } else {
                        let lateral = (v.x * v.x + v.y * v.y).sqrt();
                        if lateral < VERTICAL_TOLERANCE {
                            (SpringKind::Vertical, u * u.transpose() * params.k_inter)
                        } else {
                            (SpringKind::Tilted, u * u.transpose() * params.k_shear)
                        }
                    };
                    if i == j || k.amax() == 0.0 {
                        // self-images cancel in a harmonic model
                        continue;
                    }
                    springs.push(Spring { i, j, kind, vector: v, stiffness: k });
                }
            }
        }
        Ok(ToyForceField {
            reference: reference.atoms.iter().map(|a| a.pos()).collect(),
            springs,
            params,
        })
    }

    pub fn params(&self) -> &ToyParams {
        &self.params
    }

    pub fn springs(&self) -> &[Spring] {
        &self.springs
    }

    pub fn atom_count(&self) -> usize {
        self.reference.len()
    }

    /// Forces in eV/Å on every atom of `cell`, which must be a displaced copy
    /// of the reference geometry (same atom order, no re-wrapping).
    pub fn forces(&self, cell: &Supercell) -> Result<Vec<[f64; 3]>> {
        if cell.len() != self.reference.len() {
            return Err(Error::validation(format!(
                "force field built for {} atoms, cell has {}",
                self.reference.len(),
                cell.len()
            )));
        }
        let u: Vec<Vector3<f64>> =
            cell.atoms.iter().zip(&self.reference).map(|(a, r)| a.pos() - r).collect();
        let mut f = vec![Vector3::zeros(); u.len()];
        for s in &self.springs {
            let df = s.stiffness * (u[s.j] - u[s.i]);
            f[s.i] += df;
            f[s.j] -= df;
        }
        Ok(f.into_iter().map(Into::into).collect())
    }

    /// Exact Hessian of the spring model, eV/Å², 3N×3N.
    pub fn analytic_hessian(&self) -> DMatrix<f64> {
        let n = self.reference.len();
        let mut h = DMatrix::zeros(3 * n, 3 * n);
        for s in &self.springs {
            for a in 0..3 {
                for b in 0..3 {
                    let k = s.stiffness[(a, b)];
                    h[(3 * s.i + a, 3 * s.i + b)] += k;
                    h[(3 * s.j + a, 3 * s.j + b)] += k;
                    h[(3 * s.i + a, 3 * s.j + b)] -= k;
                    h[(3 * s.j + a, 3 * s.i + b)] -= k;
                }
            }
        }
        h
    }
}

/// Forces of the default-parameter spring model built on `reference`,
/// evaluated at `cell`.
pub fn toy_forces(reference: &Supercell, cell: &Supercell, params: ToyParams) -> Result<Vec<[f64; 3]>> {
    ToyForceField::new(reference, params)?.forces(cell)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structure::{build_monolayer, build_stacked, Stacking};
    use approx::assert_relative_eq;

    fn displace(cell: &Supercell, atom: usize, v: [f64; 3]) -> Supercell {
        let mut c = cell.clone();
        for k in 0..3 {
            c.atoms[atom].position[k] += v[k];
        }
        c
    }

    #[test]
    fn reference_geometry_is_equilibrium() {
        let cell = build_stacked(3, 3, 2, Stacking::Abc, 3.3).unwrap();
        let ff = ToyForceField::new(&cell, ToyParams::default()).unwrap();
        assert!(ff.forces(&cell).unwrap().iter().flatten().all(|&f| f == 0.0));
    }

    #[test]
    fn single_out_of_plane_displacement() {
        let cell = build_monolayer(3, 3, 2.51).unwrap();
        let p = ToyParams::default();
        let ff = ToyForceField::new(&cell, p).unwrap();
        let f = ff.forces(&displace(&cell, 0, [0.0, 0.0, 0.01])).unwrap();
        // three bonds, each bending spring k_z
        assert_relative_eq!(f[0][2], -3.0 * p.k_z * 0.01, max_relative = 1e-12);
        let total: f64 = f.iter().map(|v| v[2]).sum();
        assert!(total.abs() < 1e-15);
        let neighbours: Vec<_> = f.iter().enumerate().skip(1).filter(|(_, v)| v[2] != 0.0).collect();
        assert_eq!(neighbours.len(), 3);
        for (_, v) in neighbours {
            assert_relative_eq!(v[2], p.k_z * 0.01, max_relative = 1e-12);
            assert_eq!(v[0], 0.0);
        }
    }

    #[test]
    fn newton_third_law_for_random_displacement() {
        let cell = build_stacked(2, 2, 2, Stacking::Abc, 3.3).unwrap();
        let ff = ToyForceField::new(&cell, ToyParams::default()).unwrap();
        let mut c = cell.clone();
        for (i, a) in c.atoms.iter_mut().enumerate() {
            a.position[0] += 0.003 * (i as f64).sin();
            a.position[2] += 0.002 * (i as f64 * 1.7).cos();
        }
        let f = ff.forces(&c).unwrap();
        for k in 0..3 {
            assert!(f.iter().map(|v| v[k]).sum::<f64>().abs() < 1e-14);
        }
    }

    #[test]
    fn interlayer_terms_only_change_stacked_cells() {
        let mono = build_monolayer(3, 3, 2.51).unwrap();
        let st = build_stacked(3, 3, 2, Stacking::AAprime, 3.3).unwrap();
        // with interlayer springs switched off, the bottom layer of the stack
        // responds exactly like the monolayer
        let no_inter = ToyParams { k_inter: 0.0, k_shear: 0.0, ..ToyParams::default() };
        let fm = toy_forces(&mono, &displace(&mono, 0, [0.01, 0.0, 0.0]), no_inter).unwrap();
        let fs = toy_forces(&st, &displace(&st, 0, [0.01, 0.0, 0.0]), no_inter).unwrap();
        for i in 0..mono.len() {
            assert_eq!(fm[i], fs[i]);
        }
        // vertical springs do not act on in-plane motion
        let vertical_only = ToyParams { k_shear: 0.0, ..ToyParams::default() };
        let fm = toy_forces(&mono, &displace(&mono, 0, [0.01, 0.0, 0.0]), vertical_only).unwrap();
        let fs = toy_forces(&st, &displace(&st, 0, [0.01, 0.0, 0.0]), vertical_only).unwrap();
        for i in 0..mono.len() {
            assert_relative_eq!(fm[i][0], fs[i][0], epsilon = 1e-15);
            assert_relative_eq!(fm[i][1], fs[i][1], epsilon = 1e-15);
        }
        // an out-of-plane displacement picks up the interlayer restoring term
        let p = ToyParams::default();
        let fm = toy_forces(&mono, &displace(&mono, 0, [0.0, 0.0, 0.01]), p).unwrap();
        let fs = toy_forces(&st, &displace(&st, 0, [0.0, 0.0, 0.01]), p).unwrap();
        assert!(fs[0][2] < fm[0][2]);
    }

    #[test]
    fn spring_inventory() {
        let mono = build_monolayer(4, 4, 2.51).unwrap();
        let ff = ToyForceField::new(&mono, ToyParams::default()).unwrap();
        assert_eq!(ff.springs().len(), 3 * mono.len() / 2);
        let st = build_stacked(4, 4, 2, Stacking::AAprime, 3.3).unwrap();
        let ff = ToyForceField::new(&st, ToyParams::default()).unwrap();
        let count = |k| ff.springs().iter().filter(|s| s.kind == k).count();
        assert_eq!(count(SpringKind::Bond), 3 * st.len() / 2);
        // every atom has a partner directly above and below
        assert_eq!(count(SpringKind::Vertical), st.len());
        assert!(count(SpringKind::Tilted) > 0);
    }

    #[test]
    fn negative_constants_rejected() {
        let cell = build_monolayer(2, 2, 2.51).unwrap();
        let p = ToyParams { k_z: -1.0, ..ToyParams::default() };
        assert!(ToyForceField::new(&cell, p).is_err());
    }
}
