//! Error type shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty p-value vector")]
    EmptyPValues,

    #[error("p-value at index {index} is {value}, outside [0, 1]")]
    PValueOutOfRange { index: usize, value: f64 },

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("insufficient null replicates: got {got}, need at least {min}")]
    InsufficientReplicates { got: usize, min: usize },

    #[error("dimension mismatch: expected m = {expected}, input has m = {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("signal-count estimate s_hat = {s_hat} must be < m = {m}")]
    SHatOutOfRange { s_hat: usize, m: usize },

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("covariance construction failed: {0}")]
    Covariance(String),

    #[error("covariate matrix is rank deficient at column {column}")]
    RankDeficient { column: usize },

    #[error("too few statistics for density estimation: got {got}, need at least {min}")]
    TooFewStatistics { got: usize, min: usize },

    #[error("missing value at row {row}, column {column}")]
    MissingValue { row: usize, column: String },

    #[error("parse error in {path}, line {line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("schema violation: {0}")]
    Schema(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True when the error is caused by bad inputs (flags, files, parameters)
    /// rather than a numeric/runtime failure. CLI maps this to exit code 2.
    pub fn is_usage(&self) -> bool {
        !matches!(self, Error::Covariance(_))
    }
}
