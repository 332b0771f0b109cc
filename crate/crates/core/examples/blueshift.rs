//! The N-localized out-of-plane mode stiffens when a second layer is added.

use spinlattice::lattice::{defect_localized_mode, ToyParams};
use spinlattice::toygen::{generate_case, ToyGenParams, Variant};

fn defect_mode(v: Variant, toy: ToyParams) -> spinlattice::Result<f64> {
    let case = generate_case(v, 6, &ToyGenParams { toy, ..Default::default() })?;
    let i = defect_localized_mode(&case.modes, &case.defect, 40.0).expect("no localized mode");
    Ok(case.modes.frequencies[i])
}

fn main() -> spinlattice::Result<()> {
    let base = ToyParams::default();
    let mono = defect_mode(Variant::Monolayer, base)?;
    println!("monolayer: {mono:.2} meV");
    for k in [0.0, 0.05, 0.15, 0.3] {
        let toy = ToyParams { k_inter: k, k_shear: k / 3.0, ..base };
        let aa = defect_mode(Variant::AaPrime, toy)?;
        let abc = defect_mode(Variant::Abc, toy)?;
        println!("k_inter {k:.2}: AA' {aa:.2} meV, ABC {abc:.2} meV");
    }
    Ok(())
}
