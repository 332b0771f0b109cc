//! Second-order spin-phonon couplings, channel-resolved spectral functions
//! and golden-rule two-phonon relaxation rates.
//!
//! Both phonons of the Raman process carry the same energy (the spin
//! splitting is negligible on the meV scale), so the energy-conserving delta
//! appears squared. It is regularized by a unit Gaussian of width σ, which
//! makes the rate of an isolated mode scale as 1/σ:
//!
//! F(ħω) = Σ_i |Φ_i|² g_σ(ħω − ħω_i)²,   Γ(T) = (4π/ħ) ∫ n(n+1) F d(ħω).

use std::fmt;
use std::str::FromStr;

use nalgebra::Matrix3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::dos::{gaussian, trapezoid, EnergyGrid};
use crate::spin::{SpinMatrices, C64};
use crate::units::{bose_pair_factor, CODATA_2018};
use crate::zfs::DTensorDerivatives;

/// Highest phonon energy kept in the couplings by default, meV.
pub const DEFAULT_CUTOFF: f64 = 40.0;
/// Default Gaussian width, meV.
pub const DEFAULT_SIGMA: f64 = 1.0;

// refined-grid quadrature check threshold
const QUADRATURE_TOLERANCE: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    /// |+1⟩ ↔ |−1⟩
    DoubleQuantum,
    /// |0⟩ ↔ |±1⟩
    SingleQuantum,
    /// Fluctuation of the |0⟩–|+1⟩ splitting.
    Dephasing,
}

impl Channel {
    pub const ALL: [Channel; 3] = [Channel::DoubleQuantum, Channel::SingleQuantum, Channel::Dephasing];

    pub fn short_name(self) -> &'static str {
        match self {
            Channel::DoubleQuantum => "double",
            Channel::SingleQuantum => "single",
            Channel::Dephasing => "dephase",
        }
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for Channel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "double" | "double_quantum" | "dq" => Ok(Channel::DoubleQuantum),
            "single" | "single_quantum" | "sq" => Ok(Channel::SingleQuantum),
            "dephase" | "dephasing" => Ok(Channel::Dephasing),
            other => Err(Error::validation(format!(
                "unknown channel {other:?} (expected double, single or dephase)"
            ))),
        }
    }
}

/// Coupling matrix of one mode.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeCoupling {
    pub mode: usize,
    /// meV
    pub energy: f64,
    /// ½ Σ_ab (∂²D_ab/∂q²) S_a S_b in meV, basis |+1⟩, |0⟩, |−1⟩.
    pub phi: Matrix3<C64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CouplingSet {
    pub couplings: Vec<ModeCoupling>,
    /// meV
    pub cutoff: f64,
    pub warnings: Vec<String>,
}

impl CouplingSet {
    pub fn len(&self) -> usize {
        self.couplings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.couplings.is_empty()
    }

    /// (ħω_i, |Φ_i|²) for a channel.
    pub fn sticks(&self, channel: Channel) -> Vec<(f64, f64)> {
        self.couplings.iter().map(|c| (c.energy, channel_coefficient(&c.phi, channel))).collect()
    }

    /// Copy with every Φ multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> CouplingSet {
        let mut out = self.clone();
        for c in &mut out.couplings {
            c.phi *= C64::new(factor, 0.0);
        }
        out
    }
}

/// Φ_i from the second derivatives, dropping modes above `cutoff`.
pub fn build_couplings(derivs: &DTensorDerivatives, cutoff: f64) -> Result<CouplingSet> {
    if !(cutoff > 0.0) {
        return Err(Error::validation(format!("cutoff must be positive, got {cutoff}")));
    }
    let spin = SpinMatrices::spin_one();
    let to_mev = C64::new(0.5 * CODATA_2018.ghz_to_mev, 0.0);
    let mut warnings = derivs.warnings.clone();
    let mut couplings = Vec::new();
    for m in &derivs.modes {
        if !(m.energy > 0.0) {
            warnings.push(format!("mode {} dropped: non-positive energy {} meV", m.mode, m.energy));
            continue;
        }
        if m.energy > cutoff {
            continue;
        }
        couplings.push(ModeCoupling {
            mode: m.mode,
            energy: m.energy,
            phi: spin.quadratic_form(m.second.components()) * to_mev,
        });
    }
    if couplings.is_empty() {
        warnings.push(format!("no modes below the {cutoff} meV cutoff"));
    }
    Ok(CouplingSet { couplings, cutoff, warnings })
}

/// |coupling|² of one channel, meV².
pub fn channel_coefficient(phi: &Matrix3<C64>, channel: Channel) -> f64 {
    let (p, z, m) = (0, 1, 2);
    match channel {
        Channel::DoubleQuantum => phi[(p, m)].norm_sqr(),
        Channel::SingleQuantum => phi[(z, p)].norm_sqr() + phi[(z, m)].norm_sqr(),
        Channel::Dephasing => (phi[(p, p)] - phi[(z, z)]).norm_sqr(),
    }
}

/// Gaussian-smoothed F(ħω) of one channel with its stick spectrum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralFunction {
    pub channel: Channel,
    /// meV
    pub sigma: f64,
    pub grid: EnergyGrid,
    pub energies: Vec<f64>,
    pub values: Vec<f64>,
    /// (ħω_i in meV, |Φ_i|² in meV²)
    pub sticks: Vec<(f64, f64)>,
}

impl SpectralFunction {
    pub fn integral(&self) -> f64 {
        trapezoid(&self.energies, &self.values)
    }
}

/// Grid from 0 to cutoff + 6σ with step σ/10.
pub fn default_spectral_grid(cutoff: f64, sigma: f64) -> Result<EnergyGrid> {
    EnergyGrid::new(0.0, cutoff + 6.0 * sigma, sigma / 10.0)
}

fn smoothed(sticks: &[(f64, f64)], sigma: f64, energies: &[f64]) -> Vec<f64> {
    energies
        .par_iter()
        .map(|&e| {
            sticks
                .iter()
                .map(|&(w, c)| {
                    let g = gaussian(e - w, sigma);
                    c * g * g
                })
                .sum()
        })
        .collect()
}

pub fn spectral_function(
    couplings: &CouplingSet,
    channel: Channel,
    sigma: f64,
    grid: &EnergyGrid,
) -> Result<SpectralFunction> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::validation(format!("sigma must be positive, got {sigma}")));
    }
    let sticks = couplings.sticks(channel);
    let energies = grid.points();
    let values = smoothed(&sticks, sigma, &energies);
    Ok(SpectralFunction { channel, sigma, grid: *grid, energies, values, sticks })
}

/// A rate with any quadrature warning raised while computing it.
#[derive(Debug, Clone, PartialEq)]
pub struct RateValue {
    /// Hz
    pub gamma: f64,
    pub warning: Option<String>,
}

fn rate_prefactor() -> f64 {
    4.0 * std::f64::consts::PI / CODATA_2018.hbar_mev_s
}

fn quadrature(energies: &[f64], values: &[f64], temperature: f64) -> f64 {
    // n(n+1) diverges at ħω = 0 where F is a vanishing Gaussian tail; that
    // point contributes nothing
    let integrand: Vec<f64> = energies
        .iter()
        .zip(values)
        .map(|(&e, &f)| if e > 0.0 && f != 0.0 { f * bose_pair_factor(e, temperature).unwrap_or(0.0) } else { 0.0 })
        .collect();
    rate_prefactor() * trapezoid(energies, &integrand)
}

/// Γ(T) by trapezoidal quadrature on the stored grid. The result is checked
/// against a grid with half the step; a deviation above 1% is reported.
pub fn relaxation_rate(f: &SpectralFunction, temperature: f64) -> Result<RateValue> {
    if !(temperature >= 0.0) || !temperature.is_finite() {
        return Err(Error::Domain(format!("temperature must be non-negative, got {temperature} K")));
    }
    if temperature == 0.0 {
        return Ok(RateValue { gamma: 0.0, warning: None });
    }
    let gamma = quadrature(&f.energies, &f.values, temperature);
    let fine = EnergyGrid { step: f.grid.step / 2.0, ..f.grid };
    let fine_e = fine.points();
    let check = quadrature(&fine_e, &smoothed(&f.sticks, f.sigma, &fine_e), temperature);
    let warning = if check > 0.0 && ((gamma - check) / check).abs() > QUADRATURE_TOLERANCE {
        Some(format!(
            "{} channel at {temperature:.2} K: quadrature differs by {:.2}% from a refined grid; use a finer energy step",
            f.channel,
            100.0 * (gamma - check).abs() / check
        ))
    } else {
        None
    };
    Ok(RateValue { gamma, warning })
}

/// Closed-form per-mode sum (4π/ħ) Σ |Φ_i|² n_i(n_i+1) / (2√π σ).
pub fn direct_sum_rate(couplings: &CouplingSet, channel: Channel, sigma: f64, temperature: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(Error::validation(format!("sigma must be positive, got {sigma}")));
    }
    let norm = 1.0 / (2.0 * std::f64::consts::PI.sqrt() * sigma);
    let mut sum = 0.0;
    for (w, c) in couplings.sticks(channel) {
        sum += c * bose_pair_factor(w, temperature)?;
    }
    Ok(rate_prefactor() * sum * norm)
}

/// Γ(T) of one channel over a temperature grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateCurve {
    pub channel: Channel,
    /// meV
    pub sigma: f64,
    /// meV
    pub cutoff: f64,
    /// K
    pub temperatures: Vec<f64>,
    /// Hz
    pub rates: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl RateCurve {
    /// Curve from plain (T, Γ) data, e.g. a reference table.
    pub fn from_points(channel: Channel, temperatures: Vec<f64>, rates: Vec<f64>) -> Result<Self> {
        if temperatures.len() != rates.len() {
            return Err(Error::validation("temperature and rate columns differ in length"));
        }
        Ok(RateCurve {
            channel,
            sigma: f64::NAN,
            cutoff: f64::NAN,
            temperatures,
            rates,
            source: None,
            warnings: Vec::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.temperatures.len()
    }

    pub fn is_empty(&self) -> bool {
        self.temperatures.is_empty()
    }

    /// T₁ = 1/Γ, None where Γ = 0.
    pub fn t1(&self) -> Vec<Option<f64>> {
        self.rates.iter().map(|&g| (g > 0.0).then(|| 1.0 / g)).collect()
    }
}

pub fn rate_curve(
    couplings: &CouplingSet,
    channel: Channel,
    sigma: f64,
    temperatures: &[f64],
    grid: Option<&EnergyGrid>,
) -> Result<RateCurve> {
    let grid = match grid {
        Some(g) => *g,
        None => default_spectral_grid(couplings.cutoff, sigma)?,
    };
    let f = spectral_function(couplings, channel, sigma, &grid)?;
    let values = temperatures.par_iter().map(|&t| relaxation_rate(&f, t)).collect::<Result<Vec<_>>>()?;
    let mut warnings: Vec<String> = couplings.warnings.clone();
    warnings.extend(values.iter().filter_map(|v| v.warning.clone()));
    Ok(RateCurve {
        channel,
        sigma,
        cutoff: couplings.cutoff,
        temperatures: temperatures.to_vec(),
        rates: values.iter().map(|v| v.gamma).collect(),
        source: None,
        warnings,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    Linear,
    Log,
}

impl FromStr for Spacing {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" | "lin" => Ok(Spacing::Linear),
            "log" => Ok(Spacing::Log),
            other => Err(Error::validation(format!("unknown grid spacing {other:?} (linear or log)"))),
        }
    }
}

/// Temperature grid specification, K.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TemperatureGrid {
    pub min: f64,
    pub max: f64,
    pub points: usize,
    pub spacing: Spacing,
}

impl Default for TemperatureGrid {
    fn default() -> Self {
        TemperatureGrid { min: 10.0, max: 400.0, points: 40, spacing: Spacing::Log }
    }
}

impl TemperatureGrid {
    pub fn validate(&self) -> Result<()> {
        if !(self.min > 0.0) || !(self.max > self.min) || !self.max.is_finite() {
            return Err(Error::validation(format!(
                "temperature grid needs 0 < min < max, got {}..{}",
                self.min, self.max
            )));
        }
        if self.points < 2 {
            return Err(Error::validation("temperature grid needs at least 2 points"));
        }
        Ok(())
    }

    pub fn values(&self) -> Result<Vec<f64>> {
        self.validate()?;
        let last = (self.points - 1) as f64;
        Ok((0..self.points)
            .map(|k| {
                let t = k as f64 / last;
                match self.spacing {
                    Spacing::Linear => self.min + t * (self.max - self.min),
                    Spacing::Log => (self.min.ln() + t * (self.max.ln() - self.min.ln())).exp(),
                }
            })
            .collect())
    }
}
