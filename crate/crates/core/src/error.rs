use thiserror::Error;

/// Errors surfaced by environments, generators and the trainer.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An invalid configuration value; `field` names the offending key.
    #[error("configuration error in `{field}`: {message}")]
    Config { field: String, message: String },

    /// Malformed or out-of-range actions handed to `step`.
    #[error("action error: {0}")]
    Action(String),

    /// Operation not permitted in the current episode state.
    #[error("lifecycle error: {0}")]
    Lifecycle(String),

    /// Input outside the mathematical domain of a function.
    #[error("domain error: {0}")]
    Domain(String),

    /// Violated caller contract (mismatched lengths and similar).
    #[error("contract error: {0}")]
    Contract(String),

    /// Training produced a NaN or infinite loss.
    #[error("non-finite value: {0}")]
    NonFinite(String),

    /// Reading or writing a file failed.
    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
