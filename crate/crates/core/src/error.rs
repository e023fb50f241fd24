use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Broad failure class, used by the command-line front end to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    Data,
    Numeric,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: [u8; 4], found: [u8; 4] },

    #[error("unsupported format version {found} (expected {expected})")]
    VersionMismatch { expected: u16, found: u16 },

    #[error("truncated payload: expected {expected} bytes, found {found}")]
    Truncated { expected: u64, found: u64 },

    #[error("header mismatch: {0}")]
    HeaderMismatch(String),

    #[error("corrupt file: {0}")]
    Corrupt(String),

    #[error("non-finite value at flat index {index}")]
    NonFinite { index: usize },

    #[error("band {0} is not supported (valid bands are 2..=8)")]
    UnsupportedBand(u16),

    #[error("degenerate range: lo = hi = {0}")]
    DegenerateRange(f64),

    #[error("too few tiles: need at least {needed}, have {have}")]
    TooFewTiles { needed: usize, have: usize },

    #[error("degenerate PCA: cube has no variance")]
    DegeneratePca,

    #[error("non-finite gradient in tensor {tensor}")]
    NonFiniteGradient { tensor: usize },

    #[error("non-finite loss at batch {batch}")]
    NonFiniteLoss { batch: usize },

    #[error("backward requires a scalar loss, got dims {0:?}")]
    NonScalarLoss([usize; 4]),

    #[error("tape already consumed by a previous backward pass")]
    TapeConsumed,

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidArgument(_) | Error::UnsupportedBand(_) => ErrorKind::Usage,
            Error::NonFinite { .. }
            | Error::DegenerateRange(_)
            | Error::DegeneratePca
            | Error::NonFiniteGradient { .. }
            | Error::NonFiniteLoss { .. } => ErrorKind::Numeric,
            _ => ErrorKind::Data,
        }
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

pub(crate) fn shape(msg: impl Into<String>) -> Error {
    Error::ShapeMismatch(msg.into())
}
