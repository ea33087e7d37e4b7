use thiserror::Error;

/// Errors raised by the sampling library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum AcsError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("state space has {states} states, above the enumeration cap of {cap}")]
    EnumerationCapExceeded { states: u128, cap: u128 },

    #[error("value {value} out of domain for coordinate {coord}")]
    OutOfDomain { coord: usize, value: u32 },

    #[error("invalid space: {0}")]
    InvalidSpace(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("operation requires a binary space")]
    NotBinary,

    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),

    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, AcsError>;
