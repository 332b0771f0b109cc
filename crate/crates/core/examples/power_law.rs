//! Log-log slope of relaxation curves between 150 and 300 K.

use spinlattice::ratemodel::{eval_model, fit_power_law, single_mode_log_slope, EffectiveModeModel};
use spinlattice::spinphonon::{build_couplings, rate_curve, Channel, RateCurve};
use spinlattice::toygen::{generate_case, ToyGenParams, Variant};
use spinlattice::zfs::extract_derivatives;

fn main() -> spinlattice::Result<()> {
    let temps: Vec<f64> = (0..16).map(|k| 150.0 + 10.0 * k as f64).collect();

    let model = EffectiveModeModel::single(1e6, 15.0);
    let rates = temps.iter().map(|&t| eval_model(&model, t)).collect::<spinlattice::Result<Vec<_>>>()?;
    let fit = fit_power_law(&RateCurve::from_points(Channel::DoubleQuantum, temps.clone(), rates)?, (150.0, 300.0))?;
    println!(
        "single 15 meV mode: exponent {:.4} (local slope {:.4} at 150 K, {:.4} at 300 K)",
        fit.exponent,
        single_mode_log_slope(15.0, 150.0),
        single_mode_log_slope(15.0, 300.0)
    );

    for v in Variant::ALL {
        let case = generate_case(v, 6, &ToyGenParams::default())?;
        let couplings = build_couplings(&extract_derivatives(&case.samples, &case.modes, None)?, 40.0)?;
        let curve = rate_curve(&couplings, Channel::DoubleQuantum, 1.0, &temps, None)?;
        let fit = fit_power_law(&curve, (150.0, 300.0))?;
        println!("{v:<9} double-quantum exponent {:.4}", fit.exponent);
    }
    Ok(())
}
