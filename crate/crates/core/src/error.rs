use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Input that does not describe a valid object.
    #[error("malformed input: {0}")]
    Malformed(String),
    /// A structural invariant or precondition fails.
    #[error("invalid: {0}")]
    Invalid(String),
    /// A computation that should succeed on the instance did not.
    #[error("{0}")]
    Failed(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

