use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: row {row}, column {column}: {message}")]
    Data {
        path: PathBuf,
        row: usize,
        column: usize,
        message: String,
    },

    #[error("{0}")]
    Format(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("training diverged at epoch {epoch}, batch {batch}: loss is {value}")]
    Diverged { epoch: usize, batch: usize, value: f64 },

    #[error("labels are required for {0}")]
    MissingLabels(&'static str),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures caused by arithmetic rather than input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NonFinite(_) | Error::Diverged { .. })
    }
}
