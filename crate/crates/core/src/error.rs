use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("finger index {index} out of range (model has {count} fingers)")]
    FingerIndex { index: usize, count: usize },

    #[error("invalid model: {0}")]
    Model(String),

    #[error("invalid mesh: {0}")]
    Mesh(String),

    #[error("invalid hull: {0}")]
    Hull(String),

    #[error("invalid scene: {0}")]
    Scene(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported format tag `{found}` (expected `{expected}`)")]
    Format { expected: String, found: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
