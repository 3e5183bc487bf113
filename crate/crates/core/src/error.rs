use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("configuration has no particles")]
    NoParticles,

    #[error("color {0} is not present in the configuration")]
    MissingColor(u32),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid event: {0}")]
    InvalidEvent(String),

    #[error("corrupted coupled state: {0}")]
    CorruptedState(String),

    #[error("fit error: {0}")]
    Fit(String),

    #[error("invalid experiment spec: {0}")]
    Spec(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed report data in {path}: {message}")]
    Schema { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn schema(path: impl Into<PathBuf>, message: impl std::fmt::Display) -> Self {
        Error::Schema {
            path: path.into(),
            message: message.to_string(),
        }
    }
}
