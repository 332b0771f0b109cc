//! S = 1 spin algebra and the zero-field-splitting tensor type.
//!
//! The basis order is fixed to |+1⟩, |0⟩, |−1⟩ everywhere in the crate.

use nalgebra::{Complex, Matrix3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;

/// Relative tolerance for the symmetry check on tensors.
pub const SYMMETRY_TOLERANCE: f64 = 1e-12;

/// Spin projection m_s of an S = 1 level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Ms {
    Plus,
    Zero,
    Minus,
}

impl Ms {
    pub const ALL: [Ms; 3] = [Ms::Plus, Ms::Zero, Ms::Minus];

    /// Row/column of this level in the |+1⟩, |0⟩, |−1⟩ basis.
    pub fn index(self) -> usize {
        match self {
            Ms::Plus => 0,
            Ms::Zero => 1,
            Ms::Minus => 2,
        }
    }

    pub fn value(self) -> i32 {
        match self {
            Ms::Plus => 1,
            Ms::Zero => 0,
            Ms::Minus => -1,
        }
    }

    pub fn from_value(v: i32) -> Result<Ms> {
        match v {
            1 => Ok(Ms::Plus),
            0 => Ok(Ms::Zero),
            -1 => Ok(Ms::Minus),
            other => Err(Error::validation(format!("m_s must be -1, 0 or +1, got {other}"))),
        }
    }
}

/// Spin-1 operators Sx, Sy, Sz.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinMatrices {
    pub sx: Matrix3<C64>,
    pub sy: Matrix3<C64>,
    pub sz: Matrix3<C64>,
}

impl SpinMatrices {
    pub fn spin_one() -> Self {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let z = C64::new(0.0, 0.0);
        let re = |x: f64| C64::new(x, 0.0);
        let im = |x: f64| C64::new(0.0, x);
        SpinMatrices {
            sx: Matrix3::new(z, re(r), z, re(r), z, re(r), z, re(r), z),
            sy: Matrix3::new(z, im(-r), z, im(r), z, im(-r), z, im(r), z),
            sz: Matrix3::new(re(1.0), z, z, z, z, z, z, z, re(-1.0)),
        }
    }

    pub fn component(&self, a: usize) -> &Matrix3<C64> {
        match a {
            0 => &self.sx,
            1 => &self.sy,
            2 => &self.sz,
            _ => panic!("spin component index {a} out of range"),
        }
    }

    /// V = Σ_ab T_ab S_a S_b for an arbitrary real 3×3 tensor.
    pub fn quadratic_form(&self, t: &Matrix3<f64>) -> Matrix3<C64> {
        let mut v = Matrix3::<C64>::zeros();
        for a in 0..3 {
            for b in 0..3 {
                let w = t[(a, b)];
                if w != 0.0 {
                    v += (self.component(a) * self.component(b)) * C64::new(w, 0.0);
                }
            }
        }
        v
    }
}

/// Symmetric real 3×3 zero-field-splitting tensor, in GHz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 9]", into = "[f64; 9]")]
pub struct DTensor(Matrix3<f64>);

impl DTensor {
    pub fn new(components: Matrix3<f64>) -> Result<Self> {
        check_symmetric(&components)?;
        Ok(DTensor(components))
    }

    /// Symmetrize (M + Mᵀ)/2 and return the relative asymmetry that was removed.
    pub fn symmetrized(components: Matrix3<f64>) -> (Self, f64) {
        let asym = relative_asymmetry(&components);
        (DTensor((components + components.transpose()) * 0.5), asym)
    }

    pub fn from_row_major(v: [f64; 9]) -> Result<Self> {
        DTensor::new(Matrix3::from_row_slice(&v))
    }

    pub fn to_row_major(&self) -> [f64; 9] {
        let m = &self.0;
        [
            m[(0, 0)], m[(0, 1)], m[(0, 2)],
            m[(1, 0)], m[(1, 1)], m[(1, 2)],
            m[(2, 0)], m[(2, 1)], m[(2, 2)],
        ]
    }

    pub fn zero() -> Self {
        DTensor(Matrix3::zeros())
    }

    /// Axial, traceless tensor D·diag(−1/3, −1/3, 2/3) whose D-constant is `d`.
    pub fn axial(d: f64) -> Self {
        DTensor(Matrix3::from_diagonal(&nalgebra::Vector3::new(-d / 3.0, -d / 3.0, 2.0 * d / 3.0)))
    }

    pub fn diagonal(xx: f64, yy: f64, zz: f64) -> Self {
        DTensor(Matrix3::from_diagonal(&nalgebra::Vector3::new(xx, yy, zz)))
    }

    pub fn components(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    /// R·D·Rᵀ.
    pub fn rotated(&self, r: &Matrix3<f64>) -> Self {
        let m = r * self.0 * r.transpose();
        DTensor((m + m.transpose()) * 0.5)
    }

    /// Spin operator V = Σ_ab D_ab S_a S_b in the |+1⟩, |0⟩, |−1⟩ basis.
    pub fn spin_operator(&self) -> Matrix3<C64> {
        SpinMatrices::spin_one().quadratic_form(&self.0)
    }
}

impl TryFrom<[f64; 9]> for DTensor {
    type Error = Error;

    fn try_from(v: [f64; 9]) -> Result<Self> {
        DTensor::from_row_major(v)
    }
}

impl From<DTensor> for [f64; 9] {
    fn from(d: DTensor) -> Self {
        d.to_row_major()
    }
}

pub fn relative_asymmetry(m: &Matrix3<f64>) -> f64 {
    let n = m.norm();
    if n == 0.0 {
        return 0.0;
    }
    (m - m.transpose()).norm() / n
}

fn check_symmetric(m: &Matrix3<f64>) -> Result<()> {
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::validation("tensor has non-finite components"));
    }
    let scale = m.amax();
    for a in 0..3 {
        for b in (a + 1)..3 {
            if (m[(a, b)] - m[(b, a)]).abs() > SYMMETRY_TOLERANCE * scale {
                return Err(Error::validation(format!(
                    "tensor is not symmetric: [{a}][{b}] = {} vs [{b}][{a}] = {}",
                    m[(a, b)],
                    m[(b, a)]
                )));
            }
        }
    }
    Ok(())
}

/// ⟨bra| Σ_ab T_ab S_a S_b |ket⟩ for a symmetric tensor (a D-tensor or one of
/// its derivatives).
pub fn spin_matrix_element(t: &Matrix3<f64>, bra: Ms, ket: Ms) -> Result<C64> {
    check_symmetric(t)?;
    let v = SpinMatrices::spin_one().quadratic_form(t);
    Ok(v[(bra.index(), ket.index())])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn commutator(a: &Matrix3<C64>, b: &Matrix3<C64>) -> Matrix3<C64> {
        a * b - b * a
    }

    fn max_abs(m: &Matrix3<C64>) -> f64 {
        m.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn spin_one_algebra() {
        let s = SpinMatrices::spin_one();
        let i = C64::new(0.0, 1.0);
        assert!(max_abs(&(commutator(&s.sx, &s.sy) - s.sz * i)) < 1e-14);
        assert!(max_abs(&(commutator(&s.sy, &s.sz) - s.sx * i)) < 1e-14);
        assert!(max_abs(&(commutator(&s.sz, &s.sx) - s.sy * i)) < 1e-14);
        let casimir = s.sx * s.sx + s.sy * s.sy + s.sz * s.sz;
        assert!(max_abs(&(casimir - Matrix3::<C64>::identity() * C64::new(2.0, 0.0))) < 1e-14);
        for m in [&s.sx, &s.sy, &s.sz] {
            assert!(max_abs(&(m - m.adjoint())) < 1e-15);
        }
        assert_eq!(s.sz[(0, 0)].re, 1.0);
        assert_eq!(s.sz[(1, 1)].re, 0.0);
        assert_eq!(s.sz[(2, 2)].re, -1.0);
    }

    #[test]
    fn axial_tensor_elements() {
        let d0 = 2.7;
        let d = DTensor::axial(d0);
        let c = d.components();
        let dq = spin_matrix_element(c, Ms::Plus, Ms::Minus).unwrap();
        assert!(dq.norm() < 1e-15);
        let p = spin_matrix_element(c, Ms::Plus, Ms::Plus).unwrap();
        let z = spin_matrix_element(c, Ms::Zero, Ms::Zero).unwrap();
        assert_relative_eq!((p - z).re, d0, max_relative = 1e-14);
    }

    #[test]
    fn rhombic_tensor_double_quantum() {
        let e = 0.37;
        let d = DTensor::diagonal(e, -e, 0.0);
        let dq = spin_matrix_element(d.components(), Ms::Plus, Ms::Minus).unwrap();
        assert_relative_eq!(dq.re, e, max_relative = 1e-14);
        assert!(dq.im.abs() < 1e-15);
    }

    #[test]
    fn non_symmetric_input_is_rejected() {
        let m = Matrix3::new(1.0, 0.5, 0.0, 0.4, 1.0, 0.0, 0.0, 0.0, 1.0);
        assert!(matches!(spin_matrix_element(&m, Ms::Plus, Ms::Zero), Err(Error::Validation(_))));
        assert!(DTensor::new(m).is_err());
    }

    #[test]
    fn row_major_round_trip() {
        let d = DTensor::from_row_major([1.0, 2.0, 3.0, 2.0, 4.0, 5.0, 3.0, 5.0, 6.0]).unwrap();
        assert_eq!(d.components()[(0, 2)], 3.0);
        assert_eq!(DTensor::from_row_major(d.to_row_major()).unwrap(), d);
        let json = serde_json::to_string(&d).unwrap();
        let back: DTensor = serde_json::from_str(&json).unwrap();
        assert_eq!(back, d);
        assert!(serde_json::from_str::<DTensor>("[1,2,0,0,1,0,0,0,1]").is_err());
    }

    fn sym_strategy() -> impl Strategy<Value = Matrix3<f64>> {
        proptest::array::uniform6(-5.0f64..5.0).prop_map(|v| {
            Matrix3::new(v[0], v[1], v[2], v[1], v[3], v[4], v[2], v[4], v[5])
        })
    }

    proptest! {
        #[test]
        fn spin_operator_is_hermitian(m in sym_strategy()) {
            let v = DTensor::new(m).unwrap().spin_operator();
            prop_assert!(max_abs(&(v - v.adjoint())) < 1e-12);
        }

        #[test]
        fn quarter_turn_about_z(m in sym_strategy()) {
            let d = DTensor::new(m).unwrap();
            let r = Matrix3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0);
            let rd = d.rotated(&r);
            prop_assert!((rd.components()[(0, 0)] - m[(1, 1)]).abs() < 1e-12);
            prop_assert!((rd.components()[(1, 1)] - m[(0, 0)]).abs() < 1e-12);
            let before = spin_matrix_element(d.components(), Ms::Plus, Ms::Minus).unwrap();
            let after = spin_matrix_element(rd.components(), Ms::Plus, Ms::Minus).unwrap();
            // the E-part (D_xx − D_yy)/2 flips sign under a quarter turn
            prop_assert!((after.re + before.re).abs() < 1e-12);
            // and |⟨+1|V|−1⟩| is invariant
            prop_assert!((after.norm() - before.norm()).abs() < 1e-12);
        }

        #[test]
        fn double_quantum_element_is_hermitian_pair(m in sym_strategy()) {
            let a = spin_matrix_element(&m, Ms::Plus, Ms::Minus).unwrap();
            let b = spin_matrix_element(&m, Ms::Minus, Ms::Plus).unwrap();
            prop_assert!((a - b.conj()).norm() < 1e-12);
        }
    }
}
