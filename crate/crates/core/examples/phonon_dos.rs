//! Gaussian-broadened phonon DOS of the three toy hosts, written as CSV.

use spinlattice::io::dos_csv;
use spinlattice::lattice::{default_dos_grid, phonon_dos};
use spinlattice::toygen::{generate_case, ToyGenParams, Variant};

fn main() -> spinlattice::Result<()> {
    let dir = std::env::temp_dir().join("spinlattice-dos");
    for v in Variant::ALL {
        let case = generate_case(v, 6, &ToyGenParams::default())?;
        let grid = default_dos_grid(&case.modes, 1.0)?;
        let dos = phonon_dos(&case.modes, 1.0, &grid)?;
        let (peak, _) = dos
            .energies
            .iter()
            .zip(&dos.density)
            .filter(|(e, _)| **e < 40.0)
            .fold((0.0, 0.0), |best, (e, d)| if *d > best.1 { (*e, *d) } else { best });
        let path = dir.join(format!("dos_{v}.csv"));
        spinlattice::io::write_text(&path, &dos_csv(&dos)?)?;
        println!(
            "{v:<9} {} modes counted, integral {:.3}, strongest peak below 40 meV at {peak:.1} meV -> {}",
            dos.mode_count,
            dos.integral(),
            path.display()
        );
    }
    Ok(())
}
