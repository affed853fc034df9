use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the graph-learning stack.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{file}:{line}: {message}")]
    Consistency {
        file: PathBuf,
        line: usize,
        message: String,
    },

    #[error("format error in {file}: {message}")]
    Format { file: PathBuf, message: String },

    #[error("shape error in {op}: {lhs:?} vs {rhs:?}")]
    Shape {
        op: &'static str,
        lhs: (usize, usize),
        rhs: (usize, usize),
    },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("split error: {0}")]
    Split(String),

    #[error("non-finite value at parameter `{path}`: {message}")]
    Numeric { path: String, message: String },

    #[error("training aborted at epoch {epoch}, sample {sample}: {message}")]
    Training {
        epoch: usize,
        sample: usize,
        message: String,
    },

    #[error("checkpoint error: {0}")]
    Checkpoint(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(file: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Format {
            file: file.into(),
            message: message.into(),
        }
    }
}
