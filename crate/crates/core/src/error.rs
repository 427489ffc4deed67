use std::path::PathBuf;

use thiserror::Error;

/// Toolkit-wide error type. Variants map onto the CLI exit-code
/// taxonomy: config errors exit 2, data errors 3, provider errors 4.
#[derive(Debug, Error)]
pub enum Error {
    #[error("config: {0}")]
    Config(String),

    #[error("i/o on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("data: {0}")]
    Data(String),

    #[error("line {line}: {message}")]
    Record { line: usize, message: String },

    #[error("provider: {0}")]
    Provider(String),

    #[error("annotator: {0}")]
    Annotator(String),

    #[error("cache miss for {0}")]
    CacheMiss(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Exit code category for the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Provider(_) | Error::Annotator(_) | Error::CacheMiss(_) => 4,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
