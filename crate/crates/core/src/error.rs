use thiserror::Error;

/// Errors raised anywhere in the lesion pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("unsupported channel count {0} (expected 1 or 3)")]
    UnsupportedChannels(usize),

    #[error("invalid image dimensions {width}x{height} with {len} samples")]
    InvalidDimensions { width: usize, height: usize, len: usize },

    #[error("image too small for segmentation: {width}x{height} (minimum {min}x{min})")]
    ImageTooSmall { width: usize, height: usize, min: usize },

    #[error("segmentation failed: {0}")]
    DegenerateMask(String),

    #[error("mask is empty")]
    EmptyMask,

    #[error("need at least 2 foreground pixels, found {0}")]
    TooFewPixels(usize),

    #[error("lesion centroid ({x:.1}, {y:.1}) lies outside the mask")]
    CentroidOutsideMask { x: f64, y: f64 },

    #[error("feature out of range: {0}")]
    FeatureOutOfRange(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("class {0} has no records")]
    MissingClass(&'static str),

    #[error("non-finite loss at epoch {epoch}")]
    NonFiniteLoss { epoch: usize },

    #[error("AUC undefined: labels contain a single class")]
    SingleClass,

    #[error("metadata row {row}: {message}")]
    Metadata { row: usize, message: String },

    #[error("insufficient records: need {needed} per class, have {benign} benign and {malignant} malignant")]
    InsufficientRecords {
        needed: usize,
        benign: usize,
        malignant: usize,
    },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
