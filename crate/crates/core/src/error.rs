use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("value {value} is outside the Q3.29 range [-4.0, 4.0)")]
    Range { value: f64 },

    #[error("invalid decimal literal {0:?}")]
    Decimal(String),

    #[error("topology parse error at token {position} ({token:?}): {message}")]
    Parse {
        position: usize,
        token: String,
        message: String,
    },

    #[error("invalid network: {0}")]
    Validation(String),

    #[error("layer {layer}: {what} has {found} elements, expected {expected}")]
    Shape {
        layer: usize,
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid hardware config: {0}")]
    Hardware(String),

    #[error("spike encoding: {0}")]
    Encode(String),

    #[error("allocation infeasible: {0}")]
    Allocation(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: malformed JSON: {source}", path.display())]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures of the filesystem rather than of the inputs' content.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. })
    }
}
