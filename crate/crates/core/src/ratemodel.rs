//! Effective-mode rate model Γ(T) = Σ A_i n_i(n_i+1) + A_s, power-law fits
//! and comparison against reference rate tables.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spinphonon::RateCurve;
use crate::units::{bose_pair_factor, CODATA_2018};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectiveMode {
    /// Hz
    pub amplitude: f64,
    /// meV
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectiveModeModel {
    pub modes: Vec<EffectiveMode>,
    /// Temperature-independent sample term, Hz.
    pub sample_constant: f64,
}

impl EffectiveModeModel {
    pub fn single(amplitude: f64, energy: f64) -> Self {
        EffectiveModeModel { modes: vec![EffectiveMode { amplitude, energy }], sample_constant: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        for m in &self.modes {
            if !(m.amplitude >= 0.0) || !(m.energy > 0.0) {
                return Err(Error::validation(format!(
                    "effective mode needs A ≥ 0 and ħω > 0, got A = {}, ħω = {}",
                    m.amplitude, m.energy
                )));
            }
        }
        if !(self.sample_constant >= 0.0) {
            return Err(Error::validation(format!("A_s must be non-negative, got {}", self.sample_constant)));
        }
        Ok(())
    }
}

pub fn eval_model(m: &EffectiveModeModel, temperature: f64) -> Result<f64> {
    m.validate()?;
    let mut g = m.sample_constant;
    for mode in &m.modes {
        g += mode.amplitude * bose_pair_factor(mode.energy, temperature)?;
    }
    Ok(g)
}

/// d ln Γ / d ln T of a single mode: x·coth(x/2) with x = ħω/k_BT.
pub fn single_mode_log_slope(energy: f64, temperature: f64) -> f64 {
    let x = energy / (CODATA_2018.kb_mev_per_k * temperature);
    x / (0.5 * x).tanh()
}

/// Fitted model with its log-space residual.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectiveModeFit {
    pub model: EffectiveModeModel,
    /// RMS of ln Γ_model − ln Γ_data.
    pub residual: f64,
    pub iterations: usize,
    /// Number of multi-start runs that converged.
    pub converged_starts: usize,
}

/// Options for [`fit_effective_modes`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub n_modes: usize,
    pub fit_sample_constant: bool,
    /// Upper end of the initial-energy grid, meV.
    pub max_energy: f64,
    pub max_iterations: usize,
    /// Relative step below which a run counts as converged.
    pub tolerance: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions { n_modes: 1, fit_sample_constant: false, max_energy: 40.0, max_iterations: 500, tolerance: 1e-10 }
    }
}

// initial energies are this many log-spaced points on [1, max_energy]
const START_COUNT: usize = 8;

/// Nonlinear least squares in log-rate space, parametrized by ln A_i,
/// ln ħω_i and optionally ln A_s. Damped Gauss-Newton steps are started
/// from every combination of the initial-energy grid; the lowest residual
/// wins and ties go to the lowest mode energy.
pub fn fit_effective_modes(curve: &RateCurve, opts: FitOptions) -> Result<EffectiveModeFit> {
    let n = opts.n_modes;
    if n == 0 {
        return Err(Error::validation("n_modes must be at least 1"));
    }
    let needed = 2 * n + 1;
    if curve.len() < needed {
        return Err(Error::validation(format!(
            "{} points cannot constrain {n} effective modes (need {needed})",
            curve.len()
        )));
    }
    if let Some(k) = curve.rates.iter().position(|&g| !(g > 0.0) || !g.is_finite()) {
        return Err(Error::validation(format!(
            "rates must be positive for a log-space fit; point {k} (T = {} K) has {}",
            curve.temperatures[k], curve.rates[k]
        )));
    }
    if let Some(&t) = curve.temperatures.iter().find(|&&t| !(t > 0.0)) {
        return Err(Error::validation(format!("temperatures must be positive, got {t} K")));
    }
    if !(opts.max_energy > 1.0) {
        return Err(Error::validation("initial-energy grid needs max_energy above 1 meV"));
    }
    let grid: Vec<f64> = (0..START_COUNT)
        .map(|k| (opts.max_energy.ln() * k as f64 / (START_COUNT - 1) as f64).exp())
        .collect();
    let starts = combinations(&grid, n);
    let problem = Problem { temps: &curve.temperatures, log_rates: curve.rates.iter().map(|g| g.ln()).collect(), n, fit_as: opts.fit_sample_constant };

    let runs: Vec<Run> = starts.par_iter().map(|e0| problem.solve(e0, &opts)).collect();
    let converged: Vec<&Run> = runs.iter().filter(|r| r.converged).collect();
    if converged.is_empty() {
        let best = runs.iter().map(|r| r.rms).fold(f64::INFINITY, f64::min);
        return Err(Error::Computation(format!(
            "effective-mode fit did not converge from any of {} starts (best log-RMS residual {best:.3e})",
            runs.len()
        )));
    }
    let mut best = converged[0];
    for r in &converged[1..] {
        let tie = (r.rms - best.rms).abs() <= 1e-12 * best.rms.max(1e-300) + 1e-15;
        if (!tie && r.rms < best.rms) || (tie && r.lowest_energy() < best.lowest_energy()) {
            best = r;
        }
    }
    let mut model = problem.model(&best.params);
    model.modes.sort_by(|a, b| a.energy.total_cmp(&b.energy));
    Ok(EffectiveModeFit { model, residual: best.rms, iterations: best.iterations, converged_starts: converged.len() })
}

fn combinations(values: &[f64], k: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    if k > values.len() {
        // more modes than grid points: spread them over the grid instead
        let step = values.len() as f64 / k as f64;
        return vec![(0..k).map(|i| values[(i as f64 * step) as usize]).collect()];
    }
    loop {
        out.push(idx.iter().map(|&i| values[i]).collect());
        let mut i = k;
        while i > 0 && idx[i - 1] == values.len() - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return out;
        }
        idx[i - 1] += 1;
        for j in i..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

struct Problem<'a> {
    temps: &'a [f64],
    log_rates: Vec<f64>,
    n: usize,
    fit_as: bool,
}

struct Run {
    params: Vec<f64>,
    rms: f64,
    iterations: usize,
    converged: bool,
}

impl Run {
    fn lowest_energy(&self) -> f64 {
        self.params.chunks(2).filter(|c| c.len() == 2).map(|c| c[1]).fold(f64::INFINITY, f64::min)
    }
}

// ln n(n+1) = −x − 2 ln(1 − e^{−x}), stable for large x
fn ln_pair_factor(x: f64) -> f64 {
    -x - 2.0 * (-(-x).exp()).ln_1p()
}

impl Problem<'_> {
    fn model(&self, p: &[f64]) -> EffectiveModeModel {
        EffectiveModeModel {
            modes: (0..self.n).map(|i| EffectiveMode { amplitude: p[2 * i].exp(), energy: p[2 * i + 1].exp() }).collect(),
            sample_constant: if self.fit_as { p[2 * self.n].exp() } else { 0.0 },
        }
    }

    /// Residuals ln Γ_model − ln Γ_data and the Jacobian (row-major).
    fn evaluate(&self, p: &[f64], jac: Option<&mut Vec<f64>>) -> Vec<f64> {
        let np = p.len();
        let mut r = Vec::with_capacity(self.temps.len());
        let mut j = jac;
        if let Some(j) = j.as_deref_mut() {
            j.clear();
        }
        let mut terms = vec![0.0; self.n + 1];
        for (k, &t) in self.temps.iter().enumerate() {
            let kt = CODATA_2018.kb_mev_per_k * t;
            let mut slopes = vec![0.0; self.n];
            for i in 0..self.n {
                let x = p[2 * i + 1].exp() / kt;
                terms[i] = p[2 * i] + ln_pair_factor(x);
                slopes[i] = -x / (0.5 * x).tanh();
            }
            let m = if self.fit_as {
                terms[self.n] = p[2 * self.n];
                self.n + 1
            } else {
                self.n
            };
            let top = terms[..m].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let sum: f64 = terms[..m].iter().map(|&v| (v - top).exp()).sum();
            let ln_model = top + sum.ln();
            r.push(ln_model - self.log_rates[k]);
            if let Some(j) = j.as_deref_mut() {
                let mut row = vec![0.0; np];
                for i in 0..self.n {
                    let w = (terms[i] - ln_model).exp();
                    row[2 * i] = w;
                    row[2 * i + 1] = w * slopes[i];
                }
                if self.fit_as {
                    row[2 * self.n] = (terms[self.n] - ln_model).exp();
                }
                j.extend(row);
            }
        }
        r
    }

    /// Non-negative amplitudes for fixed energies from a relative linear fit.
    fn initial_amplitudes(&self, energies: &[f64]) -> Vec<f64> {
        let m = self.n + usize::from(self.fit_as);
        let rates: Vec<f64> = self.log_rates.iter().map(|v| v.exp()).collect();
        let mut a = nalgebra::DMatrix::zeros(self.temps.len(), m);
        for (k, &t) in self.temps.iter().enumerate() {
            for i in 0..self.n {
                a[(k, i)] = bose_pair_factor(energies[i], t).unwrap_or(0.0) / rates[k];
            }
            if self.fit_as {
                a[(k, self.n)] = 1.0 / rates[k];
            }
        }
        let b = nalgebra::DVector::from_element(self.temps.len(), 1.0);
        let mean = rates.iter().sum::<f64>() / rates.len() as f64;
        let floor = 1e-12 * mean;
        let sol = a.svd(true, true).solve(&b, 1e-14).map(|v| v.iter().copied().collect::<Vec<_>>());
        match sol {
            Ok(v) => v.into_iter().map(|x| if x.is_finite() && x > floor { x } else { floor }).collect(),
            Err(_) => vec![mean; m],
        }
    }

    fn solve(&self, energies: &[f64], opts: &FitOptions) -> Run {
        let amps = self.initial_amplitudes(energies);
        let mut p = Vec::new();
        for i in 0..self.n {
            p.push(amps[i].ln());
            p.push(energies[i].ln());
        }
        if self.fit_as {
            p.push(amps[self.n].ln());
        }
        let np = p.len();
        let mut jac = Vec::new();
        let mut r = self.evaluate(&p, Some(&mut jac));
        let mut cost: f64 = r.iter().map(|v| v * v).sum();
        let mut lambda = 1e-3;
        let mut converged = false;
        let mut iterations = 0;
        while iterations < opts.max_iterations {
            iterations += 1;
            if cost <= 1e-28 {
                converged = true;
                break;
            }
            let jm = nalgebra::DMatrix::from_row_slice(r.len(), np, &jac);
            let jtj = jm.transpose() * &jm;
            let g = jm.transpose() * nalgebra::DVector::from_column_slice(&r);
            let mut accepted = false;
            while lambda < 1e16 {
                let mut a = jtj.clone();
                for d in 0..np {
                    a[(d, d)] += lambda * jtj[(d, d)].max(1e-12);
                }
                let Some(step) = a.cholesky().map(|c| c.solve(&(-&g))) else {
                    lambda *= 10.0;
                    continue;
                };
                let trial: Vec<f64> = p.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
                let rt = self.evaluate(&trial, None);
                let ct: f64 = rt.iter().map(|v| v * v).sum();
                if ct.is_finite() && ct <= cost {
                    let pn = p.iter().map(|v| v * v).sum::<f64>().sqrt();
                    let small = step.norm() <= opts.tolerance * (pn + opts.tolerance);
                    p = trial;
                    r = self.evaluate(&p, Some(&mut jac));
                    let improvement = cost - ct;
                    cost = ct;
                    lambda = (lambda / 3.0).max(1e-12);
                    accepted = true;
                    if small || improvement <= 1e-30 {
                        converged = true;
                    }
                    break;
                }
                lambda *= 3.0;
            }
            if !accepted {
                // no descent direction left at working precision
                converged = true;
            }
            if converged {
                break;
            }
        }
        let rms = (cost / r.len() as f64).sqrt();
        Run { params: p, rms, iterations, converged }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub exponent: f64,
    /// Hz·K^(−exponent)
    pub prefactor: f64,
    /// K
    pub window: (f64, f64),
    /// RMS log-space residual.
    pub residual: f64,
    pub points: usize,
}

/// Linear regression of ln Γ on ln T inside `window` (inclusive).
pub fn fit_power_law(curve: &RateCurve, window: (f64, f64)) -> Result<PowerLawFit> {
    let (lo, hi) = window;
    if !(lo > 0.0) || !(hi > lo) {
        return Err(Error::validation(format!("invalid temperature window {lo}..{hi} K")));
    }
    let slack = 1e-9 * hi;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (&t, &g) in curve.temperatures.iter().zip(&curve.rates) {
        if t < lo - slack || t > hi + slack {
            continue;
        }
        if !(g > 0.0) {
            return Err(Error::validation(format!("non-positive rate {g} Hz at {t} K inside the fit window")));
        }
        xs.push(t.ln());
        ys.push(g.ln());
    }
    if xs.len() < 4 {
        return Err(Error::validation(format!(
            "power-law fit needs at least 4 points in {lo}..{hi} K, found {}",
            xs.len()
        )));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let exponent = sxy / sxx;
    let intercept = my - exponent * mx;
    let residual = (xs.iter().zip(&ys).map(|(x, y)| (intercept + exponent * x - y).powi(2)).sum::<f64>() / n).sqrt();
    Ok(PowerLawFit { exponent, prefactor: intercept.exp(), window, residual, points: xs.len() })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonPoint {
    /// K
    pub temperature: f64,
    /// Hz
    pub reference: f64,
    /// Interpolated computed rate, absent outside the curve's range.
    pub computed: Option<f64>,
    /// computed / reference
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceComparison {
    pub points: Vec<ComparisonPoint>,
    /// RMS of ln(ratio) over the points inside the range.
    pub log_rms: f64,
    /// Temperatures that fell outside the computed range.
    pub out_of_range: Vec<f64>,
}

/// Interpolate `curve` (log-log linear) at each reference temperature and
/// report computed/reference ratios. Points outside the curve are flagged.
pub fn compare_reference(curve: &RateCurve, reference: &[(f64, f64)]) -> Result<ReferenceComparison> {
    if reference.is_empty() {
        return Err(Error::validation("reference table is empty"));
    }
    if reference.windows(2).any(|w| !(w[1].0 > w[0].0)) {
        return Err(Error::validation("reference temperatures must be strictly increasing"));
    }
    if curve.temperatures.windows(2).any(|w| !(w[1] > w[0])) || curve.is_empty() {
        return Err(Error::validation("computed curve temperatures must be strictly increasing"));
    }
    let mut points = Vec::with_capacity(reference.len());
    let mut out_of_range = Vec::new();
    let mut sum = 0.0;
    let mut count = 0usize;
    for &(t, g_ref) in reference {
        let computed = interpolate(curve, t);
        if computed.is_none() {
            out_of_range.push(t);
        }
        let ratio = computed.and_then(|c| (g_ref > 0.0).then(|| c / g_ref));
        if let Some(r) = ratio.filter(|r| *r > 0.0) {
            sum += r.ln().powi(2);
            count += 1;
        }
        points.push(ComparisonPoint { temperature: t, reference: g_ref, computed, ratio });
    }
    let log_rms = if count > 0 { (sum / count as f64).sqrt() } else { f64::NAN };
    Ok(ReferenceComparison { points, log_rms, out_of_range })
}

fn interpolate(curve: &RateCurve, t: f64) -> Option<f64> {
    let ts = &curve.temperatures;
    if t < ts[0] || t > ts[ts.len() - 1] {
        return None;
    }
    if let Some(k) = ts.iter().position(|&x| x == t) {
        return Some(curve.rates[k]);
    }
    let k = ts.partition_point(|&x| x < t);
    let (t0, t1) = (ts[k - 1], ts[k]);
    let (g0, g1) = (curve.rates[k - 1], curve.rates[k]);
    if g0 > 0.0 && g1 > 0.0 {
        let s = (t.ln() - t0.ln()) / (t1.ln() - t0.ln());
        Some((g0.ln() + s * (g1.ln() - g0.ln())).exp())
    } else {
        Some(g0 + (t - t0) / (t1 - t0) * (g1 - g0))
    }
}
