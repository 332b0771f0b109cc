//! Rates for several broadenings. Isolated modes scale as 1/σ.

use spinlattice::spinphonon::{build_couplings, direct_sum_rate, rate_curve, Channel};
use spinlattice::toygen::{generate_case, ToyGenParams, Variant};
use spinlattice::zfs::extract_derivatives;

fn main() -> spinlattice::Result<()> {
    let case = generate_case(Variant::AaPrime, 6, &ToyGenParams::default())?;
    let couplings = build_couplings(&extract_derivatives(&case.samples, &case.modes, None)?, 40.0)?;
    println!("{:>6} {:>12} {:>12} {:>10}", "sigma", "Gamma(300K)", "mode sum", "sigma*G");
    for sigma in [0.5, 1.0, 2.0] {
        let g = rate_curve(&couplings, Channel::DoubleQuantum, sigma, &[300.0], None)?.rates[0];
        let d = direct_sum_rate(&couplings, Channel::DoubleQuantum, sigma, 300.0)?;
        println!("{sigma:>6} {g:>12.4e} {d:>12.4e} {:>10.4e}", sigma * g);
    }
    Ok(())
}
