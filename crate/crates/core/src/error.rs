use thiserror::Error;

/// Errors raised across the estimation pipeline.
#[derive(Debug, Error)]
pub enum QtdmError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),

    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error("undefined likelihood: {0}")]
    UndefinedLikelihood(String),

    #[error("malformed data file {path}: {reason}")]
    Format { path: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, QtdmError>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(QtdmError::InvalidArgument(msg.into()))
}
