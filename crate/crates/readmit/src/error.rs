use std::io;
use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },

    #[error("{}: {message}", path.display())]
    Format { path: PathBuf, message: String },

    #[error("{}:{line}: {message}", path.display())]
    Row { path: PathBuf, line: u64, message: String },

    #[error("embedding service at {url}: {message}")]
    Service { url: String, message: String },

    #[error("{0}")]
    Invalid(String),

    #[error(transparent)]
    Core(#[from] readmit_core::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn io(path: impl AsRef<Path>, source: io::Error) -> Self {
        Self::Io { path: path.as_ref().to_path_buf(), source }
    }

    pub fn format(path: impl AsRef<Path>, message: impl Into<String>) -> Self {
        Self::Format { path: path.as_ref().to_path_buf(), message: message.into() }
    }

    pub fn row(path: impl AsRef<Path>, line: u64, message: impl Into<String>) -> Self {
        Self::Row { path: path.as_ref().to_path_buf(), line, message: message.into() }
    }

    /// 2 for anything the filesystem or network refused, 1 for bad input.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Io { .. } | Self::Service { .. } => 2,
            _ => 1,
        }
    }

    pub(crate) fn from_csv(path: &Path, e: csv::Error) -> Self {
        let line = e.position().map(|p| p.line());
        let message = e.to_string();
        match e.into_kind() {
            csv::ErrorKind::Io(source) => Self::io(path, source),
            _ => match line {
                Some(line) => Self::row(path, line, message),
                None => Self::format(path, message),
            },
        }
    }
}
