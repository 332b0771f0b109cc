//! Quadrature of the smoothed spectral function against the per-mode sum.

use nalgebra::Matrix3;
use spinlattice::lattice::EnergyGrid;
use spinlattice::spin::C64;
use spinlattice::spinphonon::{
    direct_sum_rate, rate_curve, Channel, CouplingSet, ModeCoupling,
};
use spinlattice::units::{bose_pair_factor, CODATA_2018};

fn single_mode(energy: f64) -> CouplingSet {
    let mut phi = Matrix3::zeros();
    phi[(0, 2)] = C64::new(1.0, 0.0);
    phi[(2, 0)] = C64::new(1.0, 0.0);
    CouplingSet { couplings: vec![ModeCoupling { mode: 0, energy, phi }], cutoff: 40.0, warnings: vec![] }
}

fn main() -> spinlattice::Result<()> {
    let c = single_mode(15.0);
    let by_hand = 4.0 * std::f64::consts::PI / CODATA_2018.hbar_mev_s * bose_pair_factor(15.0, 300.0)?
        / (2.0 * std::f64::consts::PI.sqrt());
    println!("15 meV, |Phi|^2 = 1 meV^2, sigma 1 meV, 300 K: {:.4e} Hz", by_hand);

    println!("{:>6} {:>6} {:>12} {:>12} {:>8}", "sigma", "T", "quadrature", "mode sum", "ratio");
    for sigma in [0.5, 1.0, 2.0] {
        let grid = EnergyGrid::new(0.0, 40.0 + 6.0 * sigma, sigma / 5.0)?;
        for t in [50.0, 150.0, 300.0] {
            let q = rate_curve(&c, Channel::DoubleQuantum, sigma, &[t], Some(&grid))?.rates[0];
            let d = direct_sum_rate(&c, Channel::DoubleQuantum, sigma, t)?;
            println!("{sigma:>6} {t:>6} {q:>12.4e} {d:>12.4e} {:>8.4}", q / d);
        }
    }
    Ok(())
}
