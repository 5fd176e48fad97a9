use std::io;
use std::path::PathBuf;
use std::time::Duration;

use thiserror::Error;

/// Errors produced anywhere in the capture, pairing, extraction and
/// try-on stages.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid range: {0}")]
    InvalidRange(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("dimension mismatch: expected {expected:?}, got {actual:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },

    #[error("empty mask: {0}")]
    EmptyMask(&'static str),

    #[error("frame index {index} out of range (plan has {total} frames)")]
    OutOfRange { index: u64, total: u64 },

    #[error("plan mismatch: {0}")]
    PlanMismatch(String),

    #[error("grid size mismatch: {0} vs {1}")]
    SizeMismatch(usize, usize),

    #[error("nearest-neighbor index is empty")]
    EmptyIndex,

    #[error("translate request has an empty garment mask")]
    EmptyRequest,

    #[error("external translator did not answer within {0:?}")]
    Timeout(Duration),

    #[error("malformed translator response: {0}")]
    MalformedResponse(String),

    #[error("image format: {0}")]
    Format(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        Error::Json {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by invalid user-supplied parameters, as
    /// opposed to failures while running.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidRange(_)
                | Error::InvalidParams(_)
                | Error::OutOfRange { .. }
                | Error::SizeMismatch(..)
                | Error::PlanMismatch(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
