use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] eqpo_core::Error),
    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
    #[error("config {path}: {message}")]
    Config { path: PathBuf, message: String },
    #[error("invalid experiment: {0}")]
    Spec(String),
}

impl HarnessError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io { path: path.into(), source }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
