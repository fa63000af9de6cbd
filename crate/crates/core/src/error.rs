//! Crate-wide error type.

use thiserror::Error;

/// Errors surfaced by the simulation library.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter violates its documented domain (non-positive distance,
    /// zero-magnitude unit vector, pole of a closed form, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Operands have inconsistent shapes.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A training design produced a numerically singular system
    /// (condition estimate above 1e12 or a rank-deficient accumulator).
    #[error("singular training design: {0}")]
    SingularDesign(String),

    /// A training design with a vanishing Schur scalar: the cross block
    /// cancels the RIS block and the joint estimate is unidentifiable.
    #[error("degenerate training design: {0}")]
    DegenerateDesign(String),

    /// Configuration file problems; the message names the offending field.
    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn dims(msg: impl Into<String>) -> Self {
        Error::DimensionMismatch(msg.into())
    }
}
