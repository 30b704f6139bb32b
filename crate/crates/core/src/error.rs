use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("shape mismatch: expected {expected}, found {found}")]
    Shape { expected: usize, found: usize },

    #[error("architecture mismatch: expected {expected:?}, found {found:?}")]
    Architecture {
        expected: Vec<usize>,
        found: Vec<usize>,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("replay buffer not ready: holds {len} transitions, batch needs {needed}")]
    NotReady { len: usize, needed: usize },

    #[error("infeasible in hour {hour}: {reason}")]
    Infeasible { hour: usize, reason: String },

    #[error("instance too large: {size} profiles exceeds the limit of {limit}")]
    TooLarge { size: u128, limit: u128 },

    #[error("checkpoint {path}: {reason}")]
    Checkpoint { path: PathBuf, reason: String },

    #[error("output directory {0} already holds a run")]
    OutputExists(PathBuf),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
