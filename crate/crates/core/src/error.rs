//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum BinpickError {
    /// Malformed or out-of-contract input values (non-finite coordinates,
    /// mismatched grids, out-of-bounds parameters).
    #[error("invalid input: {0}")]
    InputValidation(String),

    /// Coordinate or index outside the valid range.
    #[error("out of range: {0}")]
    Range(String),

    /// Tensor/array dimensions inconsistent with the declared network spec.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// Operation not valid in the current state (e.g. sampling an empty buffer).
    #[error("invalid state: {0}")]
    State(String),

    /// Resource exhaustion (e.g. scene placement failed after the attempt cap).
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    /// Value outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),

    /// Corrupt or incompatible checkpoint / container file.
    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, BinpickError>;
