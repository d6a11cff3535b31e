use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{kind} index {index} out of range (size {size})")]
    Index {
        kind: &'static str,
        index: usize,
        size: usize,
    },

    #[error("invalid {what}: {reason}")]
    Validation { what: &'static str, reason: String },

    #[error("no sample size up to {cap} satisfies the bound; d(T) likely grows linearly")]
    Unsatisfiable { cap: u64 },

    #[error("domain of {len} points exceeds the exact-search limit of {limit}")]
    DomainTooLarge { len: usize, limit: usize },

    #[error("internal consistency check failed: {0}")]
    Consistency(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("parse error in {path}: {reason}")]
    Parse { path: PathBuf, reason: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn validation(what: &'static str, reason: impl Into<String>) -> Self {
        Error::Validation {
            what,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit status for the CLI: 2 config, 3 numeric contract, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Parse { .. } => 2,
            Error::Io { .. } => 4,
            Error::Index { .. }
            | Error::Validation { .. }
            | Error::Unsatisfiable { .. }
            | Error::DomainTooLarge { .. }
            | Error::Consistency(_) => 3,
        }
    }
}
