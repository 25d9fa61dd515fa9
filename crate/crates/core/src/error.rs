use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid image dimensions {width}x{height}")]
    InvalidDimensions { width: usize, height: usize },

    #[error("pixel buffer holds {actual} values, expected {expected}")]
    PixelCount { expected: usize, actual: usize },

    #[error("crop {width}x{height}+{left}+{top} outside {image_width}x{image_height} image")]
    CropOutOfBounds {
        left: usize,
        top: usize,
        width: usize,
        height: usize,
        image_width: usize,
        image_height: usize,
    },

    #[error("kernel exceeds image: {size}x{size} kernel into {width}x{height}")]
    KernelExceedsImage { size: usize, width: usize, height: usize },

    #[error("kernel size must be odd and >= 1, got {0}")]
    KernelSize(usize),

    #[error("image too small for color structure: {width}x{height} (subsampled {sub_width}x{sub_height})")]
    TooSmallForColorStructure {
        width: usize,
        height: usize,
        sub_width: usize,
        sub_height: usize,
    },

    #[error("image too small for color layout: {width}x{height}, need at least 8x8")]
    TooSmallForColorLayout { width: usize, height: usize },

    #[error("image too small for NGTDM radius d={d}: {width}x{height}")]
    TooSmallForNgtdm { width: usize, height: usize, d: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{descriptor}: {source}")]
    Descriptor {
        descriptor: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("feature length mismatch: expected {expected}, got {actual}")]
    Arity { expected: usize, actual: usize },

    #[error("range {start}..{end} out of bounds for view of length {len}")]
    RangeBounds { start: usize, end: usize, len: usize },

    #[error("training data must contain both +1 and -1 labels")]
    SingleClass,

    #[error("label {0} is not a binary label (+1/-1)")]
    NonBinaryLabel(i64),

    #[error("class {0} has no examples")]
    EmptyClass(i64),

    #[error("class {class} has {count} examples, fewer than {folds} folds")]
    ClassTooSmall { class: i64, count: usize, folds: usize },

    #[error("need at least {needed} classes, got {actual}")]
    TooFewClasses { needed: usize, actual: usize },

    #[error("non-finite kernel value K({i},{j}) = {value}")]
    NonFiniteKernel { i: usize, j: usize, value: f64 },

    #[error("cannot split {len} examples into {folds} folds")]
    Folds { folds: usize, len: usize },

    #[error("empty data view")]
    EmptyView,

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("failed to decode image {path}: {message}")]
    Decode { path: PathBuf, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn in_descriptor(self, descriptor: &'static str) -> Self {
        Error::Descriptor {
            descriptor,
            source: Box::new(self),
        }
    }

    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
