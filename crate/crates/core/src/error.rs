//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by solver construction and evaluation.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid user-facing configuration (grid sizes, parameters, schedules).
    #[error("configuration error: {0}")]
    Config(String),

    /// An API contract was violated (size mismatch, inadmissible argument).
    #[error("contract violation: {0}")]
    Contract(String),

    /// A numerical operation produced a nonfinite or invalid result.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Continuation lost track of its solution branch.
    #[error("branch lost at stage {stage}: {detail}")]
    BranchLost { stage: usize, detail: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
    pub fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }
    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }
}
