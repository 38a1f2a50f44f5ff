use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid topology: {0}")]
    TopologyValidation(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    /// Inputs disagree with each other (e.g. a neighbor state is missing).
    #[error("internal consistency: {0}")]
    Inconsistent(String),

    #[error("state update produced a non-finite value")]
    NonFinite,

    /// The closed loop produced a non-finite state.
    #[error("numeric overflow at step {step}, vehicle {vehicle}")]
    NumericOverflow { step: usize, vehicle: usize },

    #[error("config error at {location}: {message}")]
    Config { location: String, message: String },

    #[error("{}:{line}: {message}", path.display())]
    Ingest {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("unknown solver backend `{0}`")]
    UnknownBackend(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            location: location.into(),
            message: message.into(),
        }
    }

    pub(crate) fn ingest(path: &std::path::Path, line: usize, message: impl Into<String>) -> Self {
        Error::Ingest {
            path: path.to_path_buf(),
            line,
            message: message.into(),
        }
    }
}
