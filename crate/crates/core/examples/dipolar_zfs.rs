//! Point-dipole D-tensor of a boron vacancy and its calibration.

use nalgebra::Vector3;
use spinlattice::toygen::{calibrate_dipolar_scale, defect_cell, DefectSpinModel, Variant};
use spinlattice::units::FREE_ELECTRON_G;
use spinlattice::zfs::{diagonalize_dtensor, dipolar_dtensor, SpinSite};

fn main() -> spinlattice::Result<()> {
    let pair = [
        SpinSite { position: Vector3::zeros(), weight: 0.5 },
        SpinSite { position: Vector3::new(0.0, 0.0, 1.0), weight: 0.5 },
    ];
    let d = dipolar_dtensor(&pair, 1.0)?;
    println!("two half spins 1 Å apart on z: Dzz = {:.4} GHz, Dxx = {:.4} GHz", d.components()[(2, 2)], d.components()[(0, 0)]);

    for v in Variant::ALL {
        let (cell, defect) = defect_cell(v, 6)?;
        let unit = DefectSpinModel::new(&cell, &defect, 1.0, FREE_ELECTRON_G);
        let raw = diagonalize_dtensor(&unit.dtensor(&cell)?);
        let scale = calibrate_dipolar_scale(v, 6, v.target_d(), FREE_ELECTRON_G)?;
        let model = DefectSpinModel { scale, ..unit };
        let cal = diagonalize_dtensor(&model.dtensor(&cell)?);
        println!(
            "{v:<9} N-N distance {:.4} Å  unscaled D {:.4} GHz  scale {:.4}  calibrated D {:.4} GHz  E {:.1e}",
            (defect.neighbor_positions(&cell)[0] - defect.neighbor_positions(&cell)[1]).norm(),
            raw.d,
            scale,
            cal.d,
            cal.e
        );
    }
    Ok(())
}
