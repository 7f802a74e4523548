use std::io;
use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum StudioError {
    #[error(transparent)]
    Core(#[from] histoblend_core::Error),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{context}: {source}")]
    Json { context: String, source: serde_json::Error },
    #[error("{context}: {source}")]
    Csv { context: String, source: csv::Error },
    #[error("png: {0}")]
    Png(String),
    #[error("backend {endpoint}: {message}")]
    Backend { endpoint: String, message: String },
    #[error("config: {0}")]
    Config(String),
    #[error("not found: {0}")]
    NotFound(String),
    #[error("invalid request: {0}")]
    Invalid(String),
}

impl StudioError {
    pub(crate) fn io(path: impl AsRef<Path>) -> impl FnOnce(io::Error) -> Self {
        let path = path.as_ref().to_path_buf();
        move |source| StudioError::Io { path, source }
    }

    pub(crate) fn json(context: impl std::fmt::Display) -> impl FnOnce(serde_json::Error) -> Self {
        let context = context.to_string();
        move |source| StudioError::Json { context, source }
    }

    pub(crate) fn csv(context: impl std::fmt::Display) -> impl FnOnce(csv::Error) -> Self {
        let context = context.to_string();
        move |source| StudioError::Csv { context, source }
    }
}

pub type Result<T, E = StudioError> = std::result::Result<T, E>;
