//! The whole pipeline through files, the way the CLI runs it.
//!
//! cargo run --example toy_pipeline -- [variant] [n] [dir]

use std::path::PathBuf;

use spinlattice::io;
use spinlattice::spinphonon::{build_couplings, rate_curve, Channel, TemperatureGrid};
use spinlattice::toygen::{generate_case, modes_from_forceset, write_case, ToyGenParams, Variant};
use spinlattice::zfs::extract_derivatives;

fn main() -> spinlattice::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let variant: Variant = args.first().map(|s| s.parse()).transpose()?.unwrap_or(Variant::Monolayer);
    let n: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(6);
    let dir = args.get(2).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("spinlattice-toy"));

    let case = generate_case(variant, n, &ToyGenParams::default())?;
    let files = write_case(&case, &dir)?;
    println!("wrote {} and {}", files[0].display(), files[1].display());

    // read everything back, as an external dataset would be
    let set = io::parse_forceset(&files[0])?;
    let (samples, warnings) = io::parse_zfs_samples(&files[1])?;
    assert!(warnings.is_empty());
    let modes = modes_from_forceset(&set)?;
    let derivs = extract_derivatives(&samples, &modes, None)?;
    let couplings = build_couplings(&derivs, 40.0)?;
    println!("{} modes, {} below 40 meV", modes.len(), couplings.len());

    let temps = TemperatureGrid::default().values()?;
    let mut columns = Vec::new();
    for c in Channel::ALL {
        columns.push(rate_curve(&couplings, c, 1.0, &temps, None)?.rates);
    }
    let table = io::RateTable {
        temperatures: temps,
        double: columns[0].clone(),
        single: columns[1].clone(),
        dephase: columns[2].clone(),
    };
    let path = dir.join("rates.csv");
    io::write_text(&path, &io::rates_csv(&table)?)?;
    let k = table.len() - 1;
    println!(
        "{:.0} K: double {:.3e} Hz, single {:.3e} Hz, T1 {:.3e} s -> {}",
        table.temperatures[k],
        table.double[k],
        table.single[k],
        table.t1()[k],
        path.display()
    );
    Ok(())
}
