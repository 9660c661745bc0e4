use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = PeplError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum PeplError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shape mismatch: expected {expected}, got {actual}")]
    ShapeMismatch { expected: String, actual: String },

    #[error("row {row} is not a probability distribution (sum {sum}, min {min})")]
    NotSimplex { row: usize, sum: f64, min: f64 },

    #[error("class id {class} out of range for {num_classes} classes")]
    ClassOutOfRange { class: usize, num_classes: usize },

    #[error("negative CAM entry {value} at index {index}; clamp before normalizing")]
    NegativeCam { index: usize, value: f64 },

    #[error("non-finite loss at step {step}: {detail}")]
    NonFiniteLoss {
        step: u64,
        detail: String,
        dump: Option<PathBuf>,
    },

    #[error("unknown image id {0}")]
    UnknownImage(usize),

    #[error("malformed {what}: {reason}")]
    Format { what: &'static str, reason: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("png encoding failed: {0}")]
    Png(#[from] png::EncodingError),
}

impl PeplError {
    pub fn invalid(msg: impl Into<String>) -> Self {
        PeplError::InvalidArgument(msg.into())
    }

    pub(crate) fn shape(expected: impl Into<String>, actual: impl Into<String>) -> Self {
        PeplError::ShapeMismatch {
            expected: expected.into(),
            actual: actual.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        PeplError::Io {
            path: path.into(),
            source,
        }
    }
}
