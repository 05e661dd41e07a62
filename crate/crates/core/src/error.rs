//! Error type shared by all modules.

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("layer {layer}: expected input of {expected} features, got {actual}")]
    ShapeMismatch {
        layer: usize,
        expected: usize,
        actual: usize,
    },

    #[error("{what}: length mismatch ({left} vs {right})")]
    LengthMismatch {
        what: &'static str,
        left: usize,
        right: usize,
    },

    #[error("backward called before forward")]
    BackwardBeforeForward,

    #[error("optimizer step with missing gradients")]
    MissingGradients,

    #[error("target class {target} out of range (network has {classes} outputs)")]
    TargetOutOfRange { target: usize, classes: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("replay buffer holds {size} items, need at least {requested}")]
    InsufficientOccupancy { size: usize, requested: usize },

    #[error("sample mass {mass} is not in [0, {root})")]
    MassOutOfRange { mass: f64, root: f64 },

    #[error("index {index} out of range for buffer of size {size}")]
    IndexOutOfRange { index: usize, size: usize },

    #[error("environment episode already finished; call reset")]
    EpisodeFinished,

    #[error("{path}: bad IDX magic number (expected {expected:#010x}, found {actual:#010x})")]
    IdxBadMagic {
        path: PathBuf,
        expected: u32,
        actual: u32,
    },

    #[error("{path}: truncated IDX file (needed {needed} bytes, found {found})")]
    IdxTruncated {
        path: PathBuf,
        needed: usize,
        found: usize,
    },

    #[error("IDX image count {images} does not match label count {labels}")]
    IdxCountMismatch { images: usize, labels: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
