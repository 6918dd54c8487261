use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum FpmError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected:?}, found {found:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("LED ({i}, {j}) lies outside a {side}x{side} array")]
    LedOutOfBounds { i: i32, j: i32, side: usize },

    #[error("spectral shift ({u}, {v}) px does not fit a {grid}-px spectrum with a {window}-px window")]
    ShiftOutOfBounds {
        u: i64,
        v: i64,
        grid: usize,
        window: usize,
    },

    #[error("stack has no frame for LED ({i}, {j})")]
    MissingFrame { i: i32, j: i32 },

    #[error("inconsistent data: {0}")]
    Inconsistent(String),

    #[error("non-finite values in {0}")]
    NonFinite(&'static str),

    #[error("unsupported image format in {path}: {reason}")]
    UnsupportedFormat { path: PathBuf, reason: String },

    #[error("corrupt image {path}: {reason}")]
    CorruptImage { path: PathBuf, reason: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed manifest {path}: {source}")]
    Manifest {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

pub type Result<T> = std::result::Result<T, FpmError>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> FpmError {
    FpmError::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

pub(crate) fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> FpmError {
    let path = path.into();
    move |source| FpmError::Io { path, source }
}
