use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: expected {expected:?}, got {actual:?}")]
    Shape {
        expected: (usize, usize),
        actual: (usize, usize),
    },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("validation failed for `{field}`: {reason}")]
    Validation { field: String, reason: String },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("non-finite iterate at iteration {iteration}")]
    Divergence { iteration: usize },

    #[error("parse error at `{path}`: {message}")]
    Parse { path: String, message: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("channel {channel}: {source}")]
    Channel {
        channel: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub(crate) fn validation(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn parse(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Shape { .. } | Error::Argument(_) | Error::Validation { .. } => 2,
            Error::Parse { .. } | Error::Io { .. } => 3,
            Error::Numerical(_) | Error::Divergence { .. } => 4,
            Error::Channel { source, .. } => source.exit_code(),
        }
    }
}
