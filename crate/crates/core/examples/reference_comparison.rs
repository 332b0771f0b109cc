//! Compare a computed rate curve with measured points.

use spinlattice::ratemodel::compare_reference;
use spinlattice::spinphonon::{build_couplings, rate_curve, Channel, RateCurve, TemperatureGrid};
use spinlattice::toygen::{generate_case, ToyGenParams, Variant};
use spinlattice::zfs::extract_derivatives;

fn main() -> spinlattice::Result<()> {
    let curve = RateCurve::from_points(Channel::DoubleQuantum, vec![100.0, 200.0, 300.0], vec![5e3, 2.8e4, 7e4])?;
    let c = compare_reference(&curve, &[(300.0, 5e4)])?;
    println!("7e4 Hz computed vs 5e4 Hz measured at 300 K: ratio {:.3}", c.points[0].ratio.unwrap());

    let case = generate_case(Variant::AaPrime, 6, &ToyGenParams::default())?;
    let couplings = build_couplings(&extract_derivatives(&case.samples, &case.modes, None)?, 40.0)?;
    let temps = TemperatureGrid::default().values()?;
    let toy = rate_curve(&couplings, Channel::DoubleQuantum, 1.0, &temps, None)?;
    let measured = [(20.0, 1.0), (100.0, 4e3), (300.0, 5e4), (450.0, 1e5)];
    let c = compare_reference(&toy, &measured)?;
    for p in &c.points {
        match p.ratio {
            Some(r) => println!("{:>5} K: toy/measured {r:.3}", p.temperature),
            None => println!("{:>5} K: outside the computed range", p.temperature),
        }
    }
    println!("log rms {:.3}", c.log_rms);
    Ok(())
}
