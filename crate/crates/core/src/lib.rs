pub mod cli;
pub mod error;
pub mod io;
pub mod lattice;
pub mod manifest;
pub mod ratemodel;
pub mod spin;
pub mod spinphonon;
pub mod structure;
pub mod toygen;
pub mod units;
pub mod zfs;

pub use error::{Error, Result};
