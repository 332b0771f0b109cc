//! Gaussian-smeared phonon density of states.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::modes::PhononModes;

/// Uniform energy grid [start, stop] with spacing `step`, meV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyGrid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl EnergyGrid {
    pub fn new(start: f64, stop: f64, step: f64) -> Result<Self> {
        if !(step > 0.0) || !(stop > start) || !start.is_finite() || !stop.is_finite() {
            return Err(Error::validation(format!(
                "invalid energy grid [{start}, {stop}] step {step}"
            )));
        }
        Ok(EnergyGrid { start, stop, step })
    }

    pub fn len(&self) -> usize {
        ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.start + k as f64 * self.step).collect()
    }
}

/// Unit-normalized Gaussian of width σ.
pub fn gaussian(x: f64, sigma: f64) -> f64 {
    (-0.5 * (x / sigma).powi(2)).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DosCurve {
    /// meV
    pub energies: Vec<f64>,
    /// states/meV
    pub density: Vec<f64>,
    /// Number of modes that were summed (zero and imaginary modes excluded).
    pub mode_count: usize,
    pub warnings: Vec<String>,
}

impl DosCurve {
    /// Trapezoidal ∫ density d(ħω).
    pub fn integral(&self) -> f64 {
        trapezoid(&self.energies, &self.density)
    }
}

pub(crate) fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2).zip(y.windows(2)).map(|(xs, ys)| 0.5 * (xs[1] - xs[0]) * (ys[0] + ys[1])).sum()
}

/// Default grid: 0 to the highest mode + 6σ, step σ/10.
pub fn default_dos_grid(modes: &PhononModes, sigma: f64) -> Result<EnergyGrid> {
    let top = modes.frequencies.iter().cloned().fold(0.0, f64::max);
    EnergyGrid::new(0.0, top + 6.0 * sigma, sigma / 10.0)
}

pub fn phonon_dos(modes: &PhononModes, sigma: f64, grid: &EnergyGrid) -> Result<DosCurve> {
    if !(sigma > 0.0) {
        return Err(Error::validation(format!("sigma must be positive, got {sigma}")));
    }
    let mut warnings = Vec::new();
    if modes.imaginary_count() > 0 {
        warnings.push(format!("{} imaginary modes excluded from the DOS", modes.imaginary_count()));
    }
    let active: Vec<f64> = (0..modes.len())
        .filter(|&i| modes.is_physical(i))
        .map(|i| modes.frequencies[i])
        .collect();
    let energies = grid.points();
    let density = energies
        .par_iter()
        .map(|&e| active.iter().map(|&w| gaussian(e - w, sigma)).sum())
        .collect();
    Ok(DosCurve { energies, density, mode_count: active.len(), warnings })
}
