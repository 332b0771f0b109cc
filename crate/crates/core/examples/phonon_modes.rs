//! Finite-displacement phonons of a defective monolayer.

use spinlattice::lattice::{
    build_hessian, defect_localized_mode, diagonalize, displacement_protocol, enforce_acoustic_sum_rule,
    mode_character, ToyForceField, ToyParams,
};
use spinlattice::toygen::{defect_cell, Variant};

fn main() -> spinlattice::Result<()> {
    let (cell, defect) = defect_cell(Variant::Monolayer, 6)?;
    let ff = ToyForceField::new(&cell, ToyParams::default())?;
    let set = displacement_protocol(&cell, 0.01, |c| ff.forces(c))?;
    let raw = build_hessian(&set)?;
    let analytic = ff.analytic_hessian();
    let rel = (&raw.matrix - &analytic).amax() / analytic.amax();
    println!("{} atoms, {} displacement records", cell.len(), set.records.len());
    println!("numerical vs analytic Hessian: max relative difference {rel:.2e}");

    let h = enforce_acoustic_sum_rule(&raw);
    println!("translation residual after the sum rule: {:.2e}", h.translation_residual());
    let modes = diagonalize(&h)?;
    println!(
        "{} modes, {} zero, orthonormality error {:.1e}",
        modes.len(),
        modes.zero_mode_count(),
        modes.orthonormality_error()
    );

    let i = defect_localized_mode(&modes, &defect, 40.0).expect("no localized mode");
    let c = mode_character(&modes, i, &defect, None)?;
    println!(
        "defect mode {i}: {:.3} meV, out-of-plane fraction {:.3}, weight on the N neighbors {:.3}",
        modes.frequencies[i], c.out_of_plane_fraction, c.neighbor_weight
    );
    Ok(())
}
