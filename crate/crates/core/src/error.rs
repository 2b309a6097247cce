use thiserror::Error;

/// Errors raised by family construction, bound evaluation, simulation and design.
#[derive(Debug, Error)]
pub enum SnmError {
    #[error("hypothesis index {index} out of range (family has {count} hypotheses)")]
    IndexOutOfRange { index: usize, count: u128 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    /// The request is well formed but exceeds what the artifact will compute explicitly.
    #[error("capability limit: {0}")]
    CapabilityLimit(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, SnmError>;

pub(crate) fn invalid(msg: impl Into<String>) -> SnmError {
    SnmError::InvalidParameter(msg.into())
}
