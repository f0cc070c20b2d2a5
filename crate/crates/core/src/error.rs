use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{0}")]
    Domain(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("format error: {0}")]
    Format(String),

    #[error("schema version mismatch: expected `{expected}`, found `{found}`")]
    Version { expected: String, found: String },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("missing {}: run {producer} first", path.display())]
    MissingArtifact { path: PathBuf, producer: &'static str },

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the command-line front end.
    ///
    /// 1 is reserved for usage and configuration problems, 2 for bad data or
    /// schemas, 3 for pipeline ordering and protocol violations.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 1,
            Error::Contract(_) | Error::Protocol(_) | Error::MissingArtifact { .. } => 3,
            _ => 2,
        }
    }
}
