use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("empty input: {0}")]
    Empty(String),
    #[error("channel {channel} has zero variance")]
    DegenerateChannel { channel: usize },
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("signal too short: {0}")]
    TooShort(String),
    #[error("ingestion error in {}: {message}", path.display())]
    Ingest { path: PathBuf, message: String },
    #[error("split error: {0}")]
    Split(String),
    #[error("training error: {0}")]
    Train(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("report error: {0}")]
    Report(String),
    #[error(transparent)]
    Nn(#[from] imubench_nn::NnError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn ingest(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Ingest { path: path.into(), message: message.into() }
    }
}
