use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A value violates a structural invariant (non-Hermitian input, wrong dimensions).
    #[error("invariant violation: {0}")]
    Invariant(String),

    /// The numbers are well-formed but the operation is undefined for them
    /// (e.g. a matrix that should be positive definite is not).
    #[error("numerical domain error: {0}")]
    Domain(String),

    /// A caller-supplied argument is out of range.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// A configuration file or flag could not be interpreted.
    #[error("config error: {0}")]
    Config(String),

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
