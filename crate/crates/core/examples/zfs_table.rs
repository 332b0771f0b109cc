//! Axial D-tensors for the supercell-convergence table and their summaries.

use spinlattice::spin::DTensor;
use spinlattice::zfs::{diagonalize_dtensor, HYBRID_REFERENCE, SUPERCELL_CONVERGENCE};

fn main() {
    println!("{:<10} {:>10} {:>9} {:>9}", "host", "supercell", "D (GHz)", "E (GHz)");
    for r in SUPERCELL_CONVERGENCE {
        let s = diagonalize_dtensor(&DTensor::axial(r.d));
        let cell = format!("{}x{}x{}", r.supercell[0], r.supercell[1], r.supercell[2]);
        println!("{:<10} {:>10} {:>9.4} {:>9.4}", r.host, cell, s.d, s.e);
    }
    for (host, d) in HYBRID_REFERENCE {
        println!("{host}: hybrid-functional D = {d} GHz");
    }

    // a rhombic tensor, rotated: D and E do not care about the frame
    let t = DTensor::diagonal(-0.8533, -1.0267, 1.88);
    let rot = nalgebra::Rotation3::from_euler_angles(0.3, -1.1, 2.0);
    let s = diagonalize_dtensor(&t.rotated(rot.matrix()));
    println!("rotated rhombic tensor: D = {:.4}, E = {:.4}, z axis {:?}", s.d, s.e, s.principal_axes[2]);
}
