use thiserror::Error;

/// Errors raised while building or transforming models.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("construction error: {0}")]
    Construction(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl ModelError {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        ModelError::Config(msg.into())
    }

    pub(crate) fn precondition(msg: impl Into<String>) -> Self {
        ModelError::Precondition(msg.into())
    }

    pub(crate) fn internal(msg: impl Into<String>) -> Self {
        ModelError::Internal(msg.into())
    }
}

pub type Result<T, E = ModelError> = std::result::Result<T, E>;
