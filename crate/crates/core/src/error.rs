use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Violations of the ecosystem's referential and uniqueness rules.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EcosystemError {
    #[error("empty {kind} id")]
    EmptyId { kind: &'static str },
    #[error("duplicate {kind} id `{id}`")]
    DuplicateId { kind: &'static str, id: String },
    #[error("unknown {kind} `{id}`")]
    UnknownReference { kind: &'static str, id: String },
    #[error("user `{0}` follows itself")]
    SelfFollow(String),
    #[error("duplicate follow `{follower}` -> `{followed}`")]
    DuplicateFollow { follower: String, followed: String },
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Ecosystem(#[from] EcosystemError),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("{}:{line}: {message}", path.display())]
    Ingest {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
