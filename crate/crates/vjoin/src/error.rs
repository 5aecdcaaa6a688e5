//! Error types shared across the library.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid parameters, mismatched shapes, or a variant/index combination
    /// that cannot run. Raised before any work starts.
    #[error("configuration error: {0}")]
    Config(String),

    /// A file whose magic bytes or version field we do not understand.
    #[error("{path}: unrecognized format ({found})")]
    Version { path: String, found: String },

    /// A file with the right magic but structurally invalid contents,
    /// including truncation.
    #[error("{path}: malformed {what}: {reason}")]
    Format {
        path: String,
        what: &'static str,
        reason: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn format(path: &str, what: &'static str, reason: impl Into<String>) -> Self {
        Error::Format {
            path: path.to_string(),
            what,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
