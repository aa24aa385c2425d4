use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value violates one of its documented invariants.
    #[error("configuration error: {0}")]
    Config(String),

    /// An operation was called with arguments outside its precondition.
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("transport error talking to {endpoint} after {attempts} attempt(s): {message}")]
    Transport {
        endpoint: String,
        attempts: u32,
        message: String,
    },

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn config(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

pub(crate) fn argument(msg: impl Into<String>) -> Error {
    Error::Argument(msg.into())
}
