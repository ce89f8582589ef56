use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("no visible stream")]
    NoVisibleStream,

    #[error("unknown modality tag `{0}`")]
    UnknownModality(String),

    #[error("pattern `{0}` matched no files")]
    EmptyPattern(String),

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("image error on {path}: {message}")]
    Image { path: PathBuf, message: String },

    #[error("external tracker failed: {0}")]
    External(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad configuration or input validation rather
    /// than the filesystem.
    pub fn is_config(&self) -> bool {
        !matches!(self, Error::Io { .. } | Error::Image { .. })
    }
}
