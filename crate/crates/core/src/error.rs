use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("size limit exceeded: {0}")]
    Size(String),
    #[error("inconsistent trace: {0}")]
    Consistency(String),
    #[error("no feasible completion: {0}")]
    Infeasible(String),
    #[error("invalid data: {0}")]
    Data(String),
    #[error("malformed decision tree: {0}")]
    Structure(String),
    #[error("configuration errors: {}", .0.join("; "))]
    Config(Vec<String>),
    #[error("lookup failed: {0}")]
    Lookup(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Parameter(msg.into()))
}
