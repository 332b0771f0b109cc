//! Which relaxation channels each host allows.
//!
//! The monolayer and the AA′ bilayer keep a mirror plane through the defect
//! layer, so |0⟩ ↔ |±1⟩ transitions vanish. ABC stacking removes it.

use spinlattice::spinphonon::{build_couplings, rate_curve, Channel};
use spinlattice::toygen::{generate_case, ToyGenParams, Variant};
use spinlattice::zfs::extract_derivatives;

fn main() -> spinlattice::Result<()> {
    let temps = [50.0, 150.0, 300.0];
    for v in Variant::ALL {
        let case = generate_case(v, 6, &ToyGenParams::default())?;
        println!("{v}: mirror plane through the defect layer: {}", case.cell.has_horizontal_mirror(0.0, 1e-6));
        let derivs = extract_derivatives(&case.samples, &case.modes, Some(40.0))?;
        let couplings = build_couplings(&derivs, 40.0)?;
        for c in Channel::ALL {
            let curve = rate_curve(&couplings, c, 1.0, &temps, None)?;
            let row: Vec<String> = curve.rates.iter().map(|g| format!("{g:>11.3e}")).collect();
            println!("  {:<8}{}", c.short_name(), row.join(""));
        }
    }
    Ok(())
}
