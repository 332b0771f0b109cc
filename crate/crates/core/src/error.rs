use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Input outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Input that violates a documented invariant or schema.
    #[error("validation error: {0}")]
    Validation(String),

    /// A numerical procedure failed (eigensolver, fit, ...).
    #[error("computation error: {0}")]
    Computation(String),

    /// Data file is structurally fine but lacks a required record.
    #[error("missing record: {0}")]
    MissingRecord(String),

    #[error("{path}: {message}")]
    Parse { path: String, message: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// Process exit code for this error: 1 for bad input, 2 for failed
    /// computations.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Computation(_) => 2,
            _ => 1,
        }
    }
}
