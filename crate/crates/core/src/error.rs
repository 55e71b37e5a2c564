use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LabError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("computation failed: {0}")]
    Computation(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("inconsistency: {0}")]
    Inconsistency(String),
}

pub type Result<T> = std::result::Result<T, LabError>;

pub(crate) fn domain(msg: impl Into<String>) -> LabError {
    LabError::Domain(msg.into())
}

pub(crate) fn precondition(msg: impl Into<String>) -> LabError {
    LabError::Precondition(msg.into())
}

pub(crate) fn computation(msg: impl Into<String>) -> LabError {
    LabError::Computation(msg.into())
}

pub(crate) fn inconsistency(msg: impl Into<String>) -> LabError {
    LabError::Inconsistency(msg.into())
}

pub(crate) fn degenerate(msg: impl Into<String>) -> LabError {
    LabError::Degenerate(msg.into())
}
