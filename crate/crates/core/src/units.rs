//! Physical constants, Bose-Einstein occupations and the conversion of
//! mass-weighted derivatives to the dimensionless normal-coordinate
//! convention.
//!
//! Energies are carried in meV throughout the crate. Zero-field-splitting
//! quantities are kept in GHz and converted with [`PhysicalConstants::ghz_to_mev`]
//! only where they meet phonon energies.

use nalgebra::Matrix3;

use crate::error::{Error, Result};

/// Fundamental constants expressed in the crate's working units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    /// Reduced Planck constant, meV·s.
    pub hbar_mev_s: f64,
    /// Boltzmann constant, meV/K.
    pub kb_mev_per_k: f64,
    /// Energy of h·(1 GHz) in meV.
    pub ghz_to_mev: f64,
    /// (μ₀/4π)·g²·μ_B²/h in GHz·Å³.
    pub dipolar_ghz_a3: f64,
    /// ħ²/(amu·Å²) in meV.
    pub hbar2_per_amu_a2_mev: f64,
}

/// Free-electron g-factor (CODATA 2018).
pub const FREE_ELECTRON_G: f64 = 2.002_319_304_362_56;

/// CODATA 2018 values, hard-coded so outputs are bit-stable across platforms.
pub const CODATA_2018: PhysicalConstants = PhysicalConstants {
    hbar_mev_s: 6.582_119_569_509_067e-13,
    kb_mev_per_k: 8.617_333_262_145_178e-2,
    ghz_to_mev: 4.135_667_696_923_859e-3,
    dipolar_ghz_a3: 52.041_015_992_835_895,
    hbar2_per_amu_a2_mev: 4.180_159_285_619_251,
};

// SI inputs (CODATA 2018).
const PLANCK_J_S: f64 = 6.626_070_15e-34;
const ELEMENTARY_CHARGE_C: f64 = 1.602_176_634e-19;
const BOLTZMANN_J_PER_K: f64 = 1.380_649e-23;
const BOHR_MAGNETON_J_PER_T: f64 = 9.274_010_078_3e-24;
const VACUUM_PERMEABILITY: f64 = 1.256_637_062_12e-6;
const ATOMIC_MASS_KG: f64 = 1.660_539_066_60e-27;

impl PhysicalConstants {
    /// Recompute every constant from the SI definitions, using `g` for the
    /// dipolar prefactor.
    pub fn from_si(g: f64) -> Self {
        let hbar = PLANCK_J_S / (2.0 * std::f64::consts::PI);
        let j_to_mev = 1e3 / ELEMENTARY_CHARGE_C;
        let mu0_over_4pi = VACUUM_PERMEABILITY / (4.0 * std::f64::consts::PI);
        // J·m³ / (J·s) = Hz·m³ -> GHz·Å³
        let dipolar = mu0_over_4pi * g * g * BOHR_MAGNETON_J_PER_T.powi(2) / PLANCK_J_S * 1e30 / 1e9;
        PhysicalConstants {
            hbar_mev_s: hbar * j_to_mev,
            kb_mev_per_k: BOLTZMANN_J_PER_K * j_to_mev,
            ghz_to_mev: PLANCK_J_S * 1e9 * j_to_mev,
            dipolar_ghz_a3: dipolar,
            hbar2_per_amu_a2_mev: hbar * hbar / (ATOMIC_MASS_KG * 1e-20) * j_to_mev,
        }
    }

    /// Dipolar prefactor for an arbitrary g-factor, scaled from the
    /// free-electron value.
    pub fn dipolar_for_g(&self, g: f64) -> f64 {
        self.dipolar_ghz_a3 * (g / FREE_ELECTRON_G).powi(2)
    }
}

/// Bose-Einstein occupation n = 1/(exp(ħω/k_BT) − 1).
///
/// Returns exactly zero at T = 0. Zero and negative energies are rejected:
/// translational Γ-point modes have to be filtered out before this point.
pub fn bose_occupation(hw_mev: f64, temperature_k: f64) -> Result<f64> {
    check_bose_inputs(hw_mev, temperature_k)?;
    if temperature_k == 0.0 {
        return Ok(0.0);
    }
    let x = hw_mev / (CODATA_2018.kb_mev_per_k * temperature_k);
    Ok(1.0 / x.exp_m1())
}

/// The two-phonon thermal factor n(n+1), evaluated as 1/(4 sinh²(ħω/2k_BT)).
pub fn bose_pair_factor(hw_mev: f64, temperature_k: f64) -> Result<f64> {
    check_bose_inputs(hw_mev, temperature_k)?;
    if temperature_k == 0.0 {
        return Ok(0.0);
    }
    let half_x = hw_mev / (2.0 * CODATA_2018.kb_mev_per_k * temperature_k);
    if half_x > 354.0 {
        // sinh overflows; the factor is below f64::MIN_POSITIVE anyway
        return Ok(0.0);
    }
    let s = half_x.sinh();
    Ok(1.0 / (4.0 * s * s))
}

fn check_bose_inputs(hw_mev: f64, temperature_k: f64) -> Result<()> {
    if !(hw_mev > 0.0) || !hw_mev.is_finite() {
        return Err(Error::Domain(format!(
            "phonon energy must be positive and finite, got {hw_mev} meV"
        )));
    }
    if !(temperature_k >= 0.0) || !temperature_k.is_finite() {
        return Err(Error::Domain(format!(
            "temperature must be non-negative and finite, got {temperature_k} K"
        )));
    }
    Ok(())
}

/// Length of the zero-point scale √(ħ/ω) in Å·√amu for a mode of energy ħω.
pub fn zero_point_length(hw_mev: f64) -> Result<f64> {
    if !(hw_mev > 0.0) {
        return Err(Error::Domain(format!(
            "mode energy must be positive, got {hw_mev} meV"
        )));
    }
    Ok((CODATA_2018.hbar2_per_amu_a2_mev / hw_mev).sqrt())
}

/// Convert ∂²D/∂R² (R in Å·√amu) into the dimensionless coordinate
/// convention: multiply by ħ²/(amu·Å²)/ħω.
pub fn dimensionless_second_derivative(d2: &Matrix3<f64>, hw_mev: f64) -> Result<Matrix3<f64>> {
    let l = zero_point_length(hw_mev)?;
    Ok(d2 * (l * l))
}

/// Convert ∂D/∂R into the dimensionless convention (factor √(ħ²/(amu·Å²)/ħω)).
pub fn dimensionless_first_derivative(d1: &Matrix3<f64>, hw_mev: f64) -> Result<Matrix3<f64>> {
    let l = zero_point_length(hw_mev)?;
    Ok(d1 * l)
}
