//! Honeycomb boron-nitride supercells: monolayer, AA′ and ABC stackings,
//! and the boron-vacancy defect.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default in-plane lattice constant, Å.
pub const DEFAULT_LATTICE_CONSTANT: f64 = 2.51;
/// Default interlayer distance, Å.
pub const DEFAULT_INTERLAYER_DISTANCE: f64 = 3.3;
/// Vacuum height used for the non-periodic direction of a monolayer, Å.
pub const MONOLAYER_VACUUM: f64 = 20.0;
/// Atoms closer than this are rejected by [`Supercell::validate`].
pub const MIN_INTERATOMIC_DISTANCE: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Species {
    B,
    N,
}

impl Species {
    /// Standard atomic mass in amu.
    pub fn default_mass(self) -> f64 {
        match self {
            Species::B => 10.811,
            Species::N => 14.007,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Species::B => "B",
            Species::N => "N",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub species: Species,
    /// amu
    pub mass: f64,
    /// Cartesian, Å
    pub position: [f64; 3],
    pub layer: usize,
}

impl Atom {
    pub fn new(species: Species, position: [f64; 3], layer: usize) -> Self {
        Atom { species, mass: species.default_mass(), position, layer }
    }

    pub fn pos(&self) -> Vector3<f64> {
        Vector3::from(self.position)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Supercell {
    /// Rows are the lattice vectors a, b, c in Å.
    pub lattice_vectors: [[f64; 3]; 3],
    pub atoms: Vec<Atom>,
    pub periodic: [bool; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stacking {
    /// Hexagonal BN: adjacent layers rotated by π, B above N.
    AAprime,
    /// Rhombohedral BN: each layer shifted by one B–N bond vector.
    Abc,
}

impl FromStr for Stacking {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_', '\''], "").as_str() {
            "aaprime" | "aa" | "hbn" => Ok(Stacking::AAprime),
            "abc" | "rbn" => Ok(Stacking::Abc),
            _ => Err(Error::validation(format!("unknown stacking '{s}' (expected AAprime or ABC)"))),
        }
    }
}

impl fmt::Display for Stacking {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Stacking::AAprime => write!(f, "AAprime"),
            Stacking::Abc => write!(f, "ABC"),
        }
    }
}

/// Record of a boron vacancy created by [`make_vacancy`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DefectRecord {
    /// Position of the removed atom, Å.
    pub vacancy_position: [f64; 3],
    /// Index the removed atom had in the pristine cell.
    pub removed_index: usize,
    pub layer: usize,
    /// Indices (in the defective cell) of the three nearest in-plane N atoms.
    pub neighbors: [usize; 3],
    /// Minimum-image distances of those neighbors from the vacancy, Å.
    pub neighbor_distances: [f64; 3],
}

impl DefectRecord {
    /// Neighbor positions unwrapped to the minimum image around the vacancy.
    pub fn neighbor_positions(&self, cell: &Supercell) -> [Vector3<f64>; 3] {
        let v = Vector3::from(self.vacancy_position);
        self.neighbors.map(|i| v + cell.min_image(&(cell.atoms[i].pos() - v)))
    }
}

fn honeycomb_basis(a0: f64) -> (Vector3<f64>, Vector3<f64>, Vector3<f64>) {
    let a1 = Vector3::new(a0, 0.0, 0.0);
    let a2 = Vector3::new(0.5 * a0, 0.5 * 3f64.sqrt() * a0, 0.0);
    let bond = (a1 + a2) / 3.0;
    (a1, a2, bond)
}

/// n×m honeycomb monolayer with a [`MONOLAYER_VACUUM`] non-periodic c axis.
pub fn build_monolayer(n: usize, m: usize, a0: f64) -> Result<Supercell> {
    check_in_plane(n, m, a0)?;
    let (a1, a2, bond) = honeycomb_basis(a0);
    let mut atoms = Vec::with_capacity(2 * n * m);
    push_layer(&mut atoms, n, m, a1, a2, Vector3::zeros(), bond, 0);
    let cell = Supercell {
        lattice_vectors: [
            (a1 * n as f64).into(),
            (a2 * m as f64).into(),
            [0.0, 0.0, MONOLAYER_VACUUM],
        ],
        atoms,
        periodic: [true, true, false],
    };
    cell.validate()?;
    Ok(cell)
}

/// `layers` stacked n×m sheets at spacing `d`, periodic along c.
pub fn build_stacked(n: usize, m: usize, layers: usize, stacking: Stacking, d: f64) -> Result<Supercell> {
    build_stacked_with(n, m, layers, stacking, d, DEFAULT_LATTICE_CONSTANT)
}

pub fn build_stacked_with(
    n: usize,
    m: usize,
    layers: usize,
    stacking: Stacking,
    d: f64,
    a0: f64,
) -> Result<Supercell> {
    check_in_plane(n, m, a0)?;
    if layers < 2 {
        return Err(Error::validation(format!("stacked cell needs at least 2 layers, got {layers}")));
    }
    if !(d > 0.0) {
        return Err(Error::validation(format!("interlayer distance must be positive, got {d}")));
    }
    let (a1, a2, bond) = honeycomb_basis(a0);
    let mut atoms = Vec::with_capacity(2 * n * m * layers);
    for k in 0..layers {
        let z = Vector3::new(0.0, 0.0, k as f64 * d);
        match stacking {
            Stacking::AAprime => {
                // odd layers rotated by π about the site axis: B and N swap places
                if k % 2 == 0 {
                    push_layer(&mut atoms, n, m, a1, a2, z, bond, k);
                } else {
                    push_layer(&mut atoms, n, m, a1, a2, z + bond, -bond, k);
                }
            }
            Stacking::Abc => push_layer(&mut atoms, n, m, a1, a2, z + bond * k as f64, bond, k),
        }
    }
    let c_vertical = Vector3::new(0.0, 0.0, layers as f64 * d);
    let c = match stacking {
        Stacking::AAprime => {
            if layers % 2 == 1 {
                return Err(Error::validation("AA′ stacking needs an even layer count to be periodic"));
            }
            c_vertical
        }
        Stacking::Abc => {
            // the layer above the top one continues the shift sequence; 3 bond
            // vectors make a lattice vector, so reduce the shift mod 3
            let shift = match layers % 3 {
                0 => Vector3::zeros(),
                1 => bond,
                _ => -bond,
            };
            c_vertical + shift
        }
    };
    let cell = Supercell {
        lattice_vectors: [(a1 * n as f64).into(), (a2 * m as f64).into(), c.into()],
        atoms,
        periodic: [true, true, true],
    };
    cell.validate()?;
    Ok(cell)
}

fn check_in_plane(n: usize, m: usize, a0: f64) -> Result<()> {
    if n < 1 || m < 1 {
        return Err(Error::validation(format!("supercell size must be at least 1×1, got {n}×{m}")));
    }
    if !(a0 > 0.0) {
        return Err(Error::validation(format!("lattice constant must be positive, got {a0}")));
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn push_layer(
    atoms: &mut Vec<Atom>,
    n: usize,
    m: usize,
    a1: Vector3<f64>,
    a2: Vector3<f64>,
    origin: Vector3<f64>,
    bond: Vector3<f64>,
    layer: usize,
) {
    for i in 0..n {
        for j in 0..m {
            let r = origin + a1 * i as f64 + a2 * j as f64;
            atoms.push(Atom::new(Species::B, r.into(), layer));
            atoms.push(Atom::new(Species::N, (r + bond).into(), layer));
        }
    }
}

impl Supercell {
    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Matrix whose columns are the lattice vectors.
    pub fn lattice_matrix(&self) -> Matrix3<f64> {
        let l = &self.lattice_vectors;
        Matrix3::from_columns(&[l[0].into(), l[1].into(), l[2].into()])
    }

    pub fn masses(&self) -> Vec<f64> {
        self.atoms.iter().map(|a| a.mass).collect()
    }

    pub fn layer_count(&self) -> usize {
        self.atoms.iter().map(|a| a.layer + 1).max().unwrap_or(0)
    }

    pub fn validate(&self) -> Result<()> {
        let lat = self.lattice_matrix();
        if !(lat.determinant().abs() > 1e-8) {
            return Err(Error::validation("lattice vectors are linearly dependent"));
        }
        if !self.periodic[2] && self.lattice_vectors[2][2].abs() < MONOLAYER_VACUUM - 1e-9 {
            // a non-periodic c axis still needs room for the sheet
            return Err(Error::validation("non-periodic c axis needs at least 20 Å of vacuum"));
        }
        for (i, a) in self.atoms.iter().enumerate() {
            if !(a.mass > 0.0) {
                return Err(Error::validation(format!("atom {i} has non-positive mass {}", a.mass)));
            }
            if a.position.iter().any(|x| !x.is_finite()) {
                return Err(Error::validation(format!("atom {i} has a non-finite position")));
            }
        }
        for i in 0..self.atoms.len() {
            for j in (i + 1)..self.atoms.len() {
                let d = self.min_image(&(self.atoms[j].pos() - self.atoms[i].pos())).norm();
                if d < MIN_INTERATOMIC_DISTANCE {
                    return Err(Error::validation(format!(
                        "atoms {i} and {j} are {d:.4} Å apart (minimum {MIN_INTERATOMIC_DISTANCE} Å)"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Shortest periodic image of a Cartesian difference vector. Ties are
    /// resolved by the fixed image search order.
    pub fn min_image(&self, delta: &Vector3<f64>) -> Vector3<f64> {
        let lat = self.lattice_matrix();
        let inv = lat.try_inverse().expect("validated lattice is invertible");
        let mut f = inv * delta;
        for k in 0..3 {
            if self.periodic[k] {
                f[k] -= f[k].round();
            }
        }
        let base = lat * f;
        let mut best = base;
        let mut best_norm = base.norm_squared();
        let range = |k: usize| if self.periodic[k] { -1i32..=1 } else { 0..=0 };
        for i in range(0) {
            for j in range(1) {
                for k in range(2) {
                    if i == 0 && j == 0 && k == 0 {
                        continue;
                    }
                    let cand = base + lat * Vector3::new(i as f64, j as f64, k as f64);
                    let n = cand.norm_squared();
                    if n < best_norm - 1e-12 {
                        best = cand;
                        best_norm = n;
                    }
                }
            }
        }
        best
    }

    /// Every periodic image of atom `j` within `cutoff` of atom `i`, as
    /// Cartesian vectors from i. The i == j self-image at zero is skipped.
    pub fn images_within(&self, i: usize, j: usize, cutoff: f64) -> Vec<Vector3<f64>> {
        let lat = self.lattice_matrix();
        let base = self.atoms[j].pos() - self.atoms[i].pos();
        let vol = lat.determinant().abs();
        let cols = [lat.column(0).into_owned(), lat.column(1).into_owned(), lat.column(2).into_owned()];
        let mut reach = [0i32; 3];
        for k in 0..3 {
            if self.periodic[k] {
                let width = vol / cols[(k + 1) % 3].cross(&cols[(k + 2) % 3]).norm();
                let f = lat.try_inverse().unwrap() * base;
                reach[k] = ((cutoff / width).ceil() as i32) + f[k].abs().ceil() as i32 + 1;
            }
        }
        let mut out = Vec::new();
        for p in -reach[0]..=reach[0] {
            for q in -reach[1]..=reach[1] {
                for r in -reach[2]..=reach[2] {
                    let v = base + lat * Vector3::new(p as f64, q as f64, r as f64);
                    let n = v.norm();
                    if n < cutoff && n > 1e-9 {
                        out.push(v);
                    }
                }
            }
        }
        out
    }

    /// Index of the atom of `species` in `layer` closest to the in-plane
    /// centre of the cell (lowest index on ties).
    pub fn central_site(&self, species: Species, layer: usize) -> Option<usize> {
        let l = &self.lattice_vectors;
        let centre = (Vector3::from(l[0]) + Vector3::from(l[1])) * 0.5;
        let mut best: Option<(usize, f64)> = None;
        for (i, a) in self.atoms.iter().enumerate() {
            if a.species != species || a.layer != layer {
                continue;
            }
            let mut d = a.pos() - centre;
            d.z = 0.0;
            let dist = d.norm();
            match best {
                Some((_, bd)) if dist >= bd - 1e-9 => {}
                _ => best = Some((i, dist)),
            }
        }
        best.map(|(i, _)| i)
    }

    /// Whether reflection through the horizontal plane z = `z0` maps the
    /// structure onto itself (modulo lattice translations).
    pub fn has_horizontal_mirror(&self, z0: f64, tol: f64) -> bool {
        self.atoms.iter().all(|a| {
            let mut r = a.pos();
            r.z = 2.0 * z0 - r.z;
            self.atoms
                .iter()
                .any(|b| b.species == a.species && self.min_image(&(b.pos() - r)).norm() < tol)
        })
    }

    /// Same cell with the given per-atom Cartesian displacements added.
    pub fn displaced(&self, displacements: &[Vector3<f64>]) -> Supercell {
        let mut out = self.clone();
        for (a, u) in out.atoms.iter_mut().zip(displacements) {
            a.position = (a.pos() + u).into();
        }
        out
    }
}

/// Remove the boron at `site_index` and record its three nearest in-plane
/// N neighbors.
pub fn make_vacancy(cell: &Supercell, site_index: usize) -> Result<(Supercell, DefectRecord)> {
    let site = cell
        .atoms
        .get(site_index)
        .ok_or_else(|| Error::validation(format!("site index {site_index} out of range")))?;
    if site.species != Species::B {
        return Err(Error::validation(format!(
            "site {site_index} is {}; a boron vacancy needs a B site",
            site.species.symbol()
        )));
    }
    let v = site.pos();
    let layer = site.layer;
    let mut out = cell.clone();
    out.atoms.remove(site_index);

    let mut candidates: Vec<(usize, f64)> = out
        .atoms
        .iter()
        .enumerate()
        .filter(|(_, a)| a.species == Species::N && a.layer == layer)
        .map(|(i, a)| (i, out.min_image(&(a.pos() - v)).norm()))
        .collect();
    candidates.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)));
    if candidates.len() < 3 {
        return Err(Error::validation("vacancy has fewer than three N atoms in its layer"));
    }
    let neighbors = [candidates[0].0, candidates[1].0, candidates[2].0];
    let neighbor_distances = [candidates[0].1, candidates[1].1, candidates[2].1];
    let record = DefectRecord {
        vacancy_position: v.into(),
        removed_index: site_index,
        layer,
        neighbors,
        neighbor_distances,
    };
    Ok((out, record))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn monolayer_counts_and_bond_length() {
        let c = build_monolayer(1, 1, 2.51).unwrap();
        assert_eq!(c.len(), 2);
        let d = c.min_image(&(c.atoms[1].pos() - c.atoms[0].pos())).norm();
        assert_relative_eq!(d, 2.51 / 3f64.sqrt(), max_relative = 1e-12);
        assert_relative_eq!(d, 1.449, epsilon = 1e-3);
        assert_eq!(build_monolayer(6, 6, 2.51).unwrap().len(), 72);
        let big = build_monolayer(12, 12, 2.51).unwrap();
        assert_eq!(big.len(), 288);
        assert!(big.atoms.iter().all(|a| a.position[2] == 0.0));
        let n_b = big.atoms.iter().filter(|a| a.species == Species::B).count();
        assert_eq!(n_b, 144);
    }

    #[test]
    fn monolayer_rejects_bad_sizes() {
        assert!(build_monolayer(0, 3, 2.51).is_err());
        assert!(build_monolayer(3, 3, -1.0).is_err());
    }

    #[test]
    fn aa_prime_has_n_over_every_b() {
        let c = build_stacked(6, 6, 2, Stacking::AAprime, 3.3).unwrap();
        assert_eq!(c.len(), 144);
        for b in c.atoms.iter().filter(|a| a.species == Species::B) {
            for dz in [3.3, -3.3] {
                let target = b.pos() + Vector3::new(0.0, 0.0, dz);
                let hit = c.atoms.iter().any(|n| {
                    n.species == Species::N && c.min_image(&(n.pos() - target)).norm() < 1e-9
                });
                assert!(hit, "no N at dz={dz} above/below B at {:?}", b.position);
            }
        }
        assert_eq!(build_stacked(1, 1, 2, Stacking::AAprime, 3.3).unwrap().len(), 4);
    }

    #[test]
    fn abc_layer_offset_is_one_bond() {
        let c = build_stacked(6, 6, 2, Stacking::Abc, 3.3).unwrap();
        assert_eq!(c.len(), 144);
        let first_b = |layer| c.atoms.iter().find(|a| a.layer == layer && a.species == Species::B).unwrap();
        let off = first_b(1).pos() - first_b(0).pos();
        assert_relative_eq!((off.x * off.x + off.y * off.y).sqrt(), 2.51 / 3f64.sqrt(), max_relative = 1e-12);
        assert_relative_eq!(off.z, 3.3, max_relative = 1e-12);
    }

    #[test]
    fn unknown_stacking_label() {
        assert!("ABC".parse::<Stacking>().is_ok());
        assert!("aa_prime".parse::<Stacking>().is_ok());
        assert!(matches!("AB".parse::<Stacking>(), Err(Error::Validation(_))));
    }

    #[test]
    fn monolayer_vacancy_has_three_symmetric_neighbors() {
        let cell = build_monolayer(6, 6, 2.51).unwrap();
        let site = cell.central_site(Species::B, 0).unwrap();
        let (defective, rec) = make_vacancy(&cell, site).unwrap();
        assert_eq!(defective.len(), 71);
        let bond = 2.51 / 3f64.sqrt();
        for d in rec.neighbor_distances {
            assert_relative_eq!(d, bond, max_relative = 1e-12);
        }
        for &i in &rec.neighbors {
            assert_eq!(defective.atoms[i].species, Species::N);
        }
        // 120° rotations about the vacancy map the neighbors onto each other
        let v = Vector3::from(rec.vacancy_position);
        let pos = rec.neighbor_positions(&defective);
        let rot = nalgebra::Rotation3::from_axis_angle(&Vector3::z_axis(), 2.0 * std::f64::consts::PI / 3.0);
        for p in &pos {
            let q = v + rot * (p - v);
            assert!(pos.iter().any(|r| (r - q).norm() < 1e-10));
        }
    }

    #[test]
    fn vacancy_on_boundary_uses_minimum_image() {
        let cell = build_monolayer(4, 4, 2.51).unwrap();
        let (_, rec) = make_vacancy(&cell, 0).unwrap();
        let bond = 2.51 / 3f64.sqrt();
        for d in rec.neighbor_distances {
            assert_relative_eq!(d, bond, max_relative = 1e-12);
        }
    }

    #[test]
    fn stacked_vacancy_matches_monolayer_neighbors() {
        let mono = build_monolayer(6, 6, 2.51).unwrap();
        let (_, rm) = make_vacancy(&mono, mono.central_site(Species::B, 0).unwrap()).unwrap();
        let st = build_stacked(6, 6, 2, Stacking::AAprime, 3.3).unwrap();
        let site = st.central_site(Species::B, 0).unwrap();
        let (sd, rs) = make_vacancy(&st, site).unwrap();
        assert_eq!(sd.len(), 143);
        assert_eq!(rs.neighbors, rm.neighbors);
        for k in 0..3 {
            assert!((rs.neighbor_distances[k] - rm.neighbor_distances[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn removing_nitrogen_is_an_error() {
        let cell = build_monolayer(6, 6, 2.51).unwrap();
        assert!(matches!(make_vacancy(&cell, 1), Err(Error::Validation(_))));
        assert!(make_vacancy(&cell, 1000).is_err());
    }

    #[test]
    fn horizontal_mirror_distinguishes_polytypes() {
        for (cell, expect) in [
            (build_monolayer(6, 6, 2.51).unwrap(), true),
            (build_stacked(6, 6, 2, Stacking::AAprime, 3.3).unwrap(), true),
            (build_stacked(6, 6, 2, Stacking::Abc, 3.3).unwrap(), false),
        ] {
            let site = cell.central_site(Species::B, 0).unwrap();
            let (d, rec) = make_vacancy(&cell, site).unwrap();
            assert_eq!(d.has_horizontal_mirror(rec.vacancy_position[2], 1e-6), expect);
        }
    }

    #[test]
    fn serialized_cell_round_trips_bit_identically() {
        let cell = build_stacked(3, 3, 2, Stacking::Abc, 3.3).unwrap();
        let text = serde_json::to_string(&cell).unwrap();
        let back: Supercell = serde_json::from_str(&text).unwrap();
        assert_eq!(back, cell);
        for (a, b) in back.atoms.iter().zip(&cell.atoms) {
            for k in 0..3 {
                assert_eq!(a.position[k].to_bits(), b.position[k].to_bits());
            }
        }
    }

    #[test]
    fn images_within_finds_all_bonds_in_small_cells() {
        let c = build_monolayer(1, 1, 2.51).unwrap();
        // B at the origin bonds to three images of the single N
        assert_eq!(c.images_within(0, 1, 1.7).len(), 3);
        assert_eq!(c.images_within(0, 0, 1.7).len(), 0);
        assert_eq!(c.images_within(0, 0, 2.6).len(), 6);
    }
}
