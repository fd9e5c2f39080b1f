use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid extents {0:?}: expected 2 or 3 positive extents")]
    InvalidShape(Vec<usize>),

    #[error("shape mismatch: {left:?} vs {right:?}")]
    ShapeMismatch { left: Vec<usize>, right: Vec<usize> },

    #[error("expected {expected} values for the grid, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("non-finite value at flat index {index}")]
    NonFiniteValue { index: usize },

    #[error("expected a {expected}D field, got {actual}D")]
    Dimensionality { expected: usize, actual: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("mask has no foreground pixels; the signed distance is undefined")]
    EmptyForeground,

    #[error("{which} mask has an empty boundary")]
    EmptyBoundary { which: &'static str },

    #[error("the two flows share no defined pixels")]
    NoCommonSupport,

    #[error("non-finite value produced at iteration {iteration}")]
    NonFiniteIteration { iteration: usize },

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("image has a single intensity cluster; cannot split into foreground and background")]
    SingleCluster,

    #[error("malformed PGM header: {0}")]
    PgmHeader(String),

    #[error("PGM maxval {0} exceeds 255")]
    PgmMaxval(u32),

    #[error("truncated payload: expected {expected} {unit}, found {actual}")]
    Truncated {
        expected: usize,
        actual: usize,
        unit: &'static str,
    },

    #[error("bad field magic {0:?}, expected \"CFF1\"")]
    BadMagic([u8; 4]),

    #[error("field header mismatch: {0}")]
    FieldHeader(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by the file system or malformed files.
    pub fn is_io(&self) -> bool {
        matches!(
            self,
            Error::Io { .. }
                | Error::PgmHeader(_)
                | Error::PgmMaxval(_)
                | Error::Truncated { .. }
                | Error::BadMagic(_)
                | Error::FieldHeader(_)
                | Error::Json(_)
        )
    }
}
