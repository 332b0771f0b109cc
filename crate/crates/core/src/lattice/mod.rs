//! Lattice dynamics: toy force field, finite-difference Hessian, normal
//! modes and the phonon density of states.

pub mod dos;
pub mod forcefield;
pub mod hessian;
pub mod modes;

pub use dos::{default_dos_grid, gaussian, phonon_dos, DosCurve, EnergyGrid};
pub use forcefield::{toy_forces, ToyForceField, ToyParams};
pub use hessian::{
    build_hessian, displacement_protocol, enforce_acoustic_sum_rule, Axis, DisplacementForceSet,
    DisplacementRecord, Hessian, Sign, DEFAULT_DISPLACEMENT_STEP,
};
pub use modes::{
    defect_localized_mode, diagonalize, mode_character, ModeCharacter, PhononModes, ZERO_MODE_THRESHOLD,
};
