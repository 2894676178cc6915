use thiserror::Error;

/// Errors produced by the core library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("entry a({n},{k}) lies beyond the truncation order {order}")]
    Truncation { n: usize, k: usize, order: usize },

    #[error("enumeration of 2^{requested} outcomes refused: cap is {cap}")]
    EnumerationCap { requested: usize, cap: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("covariance is not positive definite: pivot {index} has value {value:e}")]
    NotPositiveDefinite { index: usize, value: f64 },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
