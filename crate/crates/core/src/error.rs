use std::io;
use std::path::PathBuf;

use thiserror::Error;

use crate::geometry::BoxError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    /// A malformed or invariant-violating record in an input file.
    #[error("{source_name}:{line}: {reason}")]
    Record {
        source_name: String,
        line: usize,
        reason: String,
    },

    #[error("invalid vocabulary: {0}")]
    Vocabulary(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    /// Inputs that are individually valid but cannot be evaluated together.
    #[error("{0}")]
    Protocol(String),

    #[error(transparent)]
    Box(#[from] BoxError),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn record(source_name: impl Into<String>, line: usize, reason: impl Into<String>) -> Self {
        Error::Record {
            source_name: source_name.into(),
            line,
            reason: reason.into(),
        }
    }

    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. })
    }
}
