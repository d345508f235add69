use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the toolkit.
///
/// Variants are split between problems with what the caller handed us
/// (`is_bad_input() == true`) and failures inside the pipeline itself.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {reason}")]
    Wav { path: PathBuf, reason: String },

    #[error("zero-length audio")]
    ZeroLengthAudio,

    #[error("silent input: {0}")]
    Silent(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("neurogram too small for 3x3 window ({rows}x{cols})")]
    TooSmall { rows: usize, cols: usize },

    #[error("all-zero reference neurogram")]
    ZeroReference,

    #[error("payload shorter than header promises ({expected} bytes expected, {found} found)")]
    TruncatedPayload { expected: usize, found: usize },

    #[error("unknown format version {0:?}")]
    UnknownFormat(String),

    #[error("malformed file {path}: {reason}")]
    Malformed { path: PathBuf, reason: String },

    #[error("degenerate feature {0}: zero variance")]
    DegenerateFeature(String),

    #[error("cell {cell} failed: {source}")]
    Cell {
        cell: String,
        #[source]
        source: Box<Error>,
    },

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// True when the failure is attributable to caller-supplied data rather
    /// than to the pipeline.
    pub fn is_bad_input(&self) -> bool {
        match self {
            Error::Io { .. } | Error::Internal(_) => false,
            Error::Cell { source, .. } => source.is_bad_input(),
            _ => true,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
