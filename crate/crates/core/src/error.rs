use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("view {0} is missing from the light field directory")]
    MissingView(usize),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("bad scene configuration: {0}")]
    BadConfig(String),
    #[error("bad PFM header: {0}")]
    BadHeader(String),
    #[error("PFM payload truncated: expected {expected} bytes, found {found}")]
    TruncatedPayload { expected: usize, found: usize },
    #[error("depth must be positive, got {0}")]
    NonPositiveDepth(f64),
    #[error("disparity 1 maps to a point at infinity")]
    UnitDisparity,
    #[error("histogram is empty")]
    EmptyHistogram,
    #[error("matching window is empty")]
    EmptyWindow,
    #[error("no input values")]
    EmptyInput,
    #[error("window side {0} must be odd and within 3..=15")]
    BadSide(usize),
    #[error("no valid samples for the matching cost")]
    NoValidSamples,
    #[error("initial disparity valid on {valid} of {total} pixels, at least half required")]
    InsufficientInitialDisparity { valid: usize, total: usize },
    #[error("bad scene spec: {0}")]
    BadSpec(String),
    #[error("evaluation mask selects no pixels")]
    EmptyMask,
    #[error("row {row} out of bounds for height {height}")]
    RowOutOfBounds { row: usize, height: usize },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Errors caused by bad input rather than by a failure inside the library.
    pub fn is_user_error(&self) -> bool {
        !matches!(self, Error::Json(_))
            && !matches!(self, Error::Image { source, .. } if matches!(source, image::ImageError::Encoding(_)))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
