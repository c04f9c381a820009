use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Io(#[from] io::Error),

    #[error("{path}")]
    Path {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("bad header: expected `{expected}`, found `{found}`")]
    Header { expected: String, found: String },

    #[error("line {line}: {message}")]
    Schema { line: u64, message: String },

    #[error("records span multiple years ({first} and {other})")]
    MixedYears { first: i32, other: i32 },

    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    /// A metric is mathematically undefined on the given input (e.g. 0/0).
    #[error("undefined: {0}")]
    Undefined(String),

    #[error("partition does not match network: {0}")]
    Partition(String),

    #[error("refusing exhaustive search over {nodes} nodes (limit {limit})")]
    TooLarge { nodes: usize, limit: usize },

    #[error("config: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn path(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Path {
            path: path.into(),
            source,
        }
    }

    pub fn is_undefined(&self) -> bool {
        matches!(self, Error::Undefined(_))
    }
}
