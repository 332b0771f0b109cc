//! Recover effective modes from rate curves.

use spinlattice::ratemodel::{eval_model, fit_effective_modes, EffectiveMode, EffectiveModeModel, FitOptions};
use spinlattice::spinphonon::{build_couplings, rate_curve, Channel, RateCurve, TemperatureGrid};
use spinlattice::toygen::{generate_case, ToyGenParams, Variant};
use spinlattice::zfs::extract_derivatives;

fn main() -> spinlattice::Result<()> {
    let temps = TemperatureGrid::default().values()?;

    let truth = EffectiveModeModel {
        modes: vec![EffectiveMode { amplitude: 3e5, energy: 8.0 }, EffectiveMode { amplitude: 2e6, energy: 22.0 }],
        sample_constant: 0.0,
    };
    let rates = temps.iter().map(|&t| eval_model(&truth, t)).collect::<spinlattice::Result<Vec<_>>>()?;
    let curve = RateCurve::from_points(Channel::DoubleQuantum, temps.clone(), rates)?;
    for n_modes in [1, 2] {
        let fit = fit_effective_modes(&curve, FitOptions { n_modes, ..Default::default() })?;
        let found: Vec<String> =
            fit.model.modes.iter().map(|m| format!("A {:.4e} Hz at {:.3} meV", m.amplitude, m.energy)).collect();
        println!("{n_modes} mode(s): {}  (log residual {:.1e})", found.join(", "), fit.residual);
    }

    let case = generate_case(Variant::Monolayer, 6, &ToyGenParams::default())?;
    let couplings = build_couplings(&extract_derivatives(&case.samples, &case.modes, None)?, 40.0)?;
    let curve = rate_curve(&couplings, Channel::DoubleQuantum, 1.0, &temps, None)?;
    let fit = fit_effective_modes(&curve, FitOptions { n_modes: 2, ..Default::default() })?;
    for m in &fit.model.modes {
        println!("toy monolayer: A {:.4e} Hz at {:.3} meV", m.amplitude, m.energy);
    }
    Ok(())
}
