use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),

    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("unsupported sample depth (maxval {0})")]
    UnsupportedDepth(u32),
    #[error("truncated data: expected {expected} bytes, found {found}")]
    TruncatedData { expected: usize, found: usize },
    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: &'static str, found: String },
    #[error("version mismatch: expected {expected}, found {found}")]
    VersionMismatch { expected: u32, found: u32 },
    #[error("label {0} does not fit in a 16-bit PGM sample")]
    LabelOverflow(u32),

    #[error("wrong channel count: expected {expected}, found {found}")]
    WrongChannelCount { expected: usize, found: usize },
    #[error("cannot upscale {src_w}x{src_h} to smaller target {dst_w}x{dst_h}")]
    Downscale { src_w: usize, src_h: usize, dst_w: usize, dst_h: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("image dimensions {width}x{height} not divisible by {factor}")]
    IndivisibleDims { width: usize, height: usize, factor: usize },

    #[error("step size {step} larger than image {width}x{height}")]
    StepTooLarge { step: usize, width: usize, height: usize },
    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("bad network dimensions: {0}")]
    BadDims(String),
    #[error("unsupported regression depth {0} (expected 1 or 3)")]
    BadDepth(usize),
    #[error("empty dataset")]
    EmptyDataset,
    #[error("non-finite loss at step {0}")]
    NonFiniteLoss(u64),
    #[error("network spec mismatch: {0}")]
    SpecMismatch(String),

    #[error("dimension mismatch: {0}")]
    DimMismatch(String),
    #[error("empty annotation list")]
    EmptyList,
    #[error("point ({x}, {y}) outside {width}x{height} image")]
    OutOfBounds { x: i64, y: i64, width: usize, height: usize },
    #[error("count mismatch: {0} superpixel maps vs {1} ground truths")]
    CountMismatch(usize, usize),

    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    /// Short variant name, used in CLI diagnostics.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io(_) => "Io",
            Error::MalformedHeader(_) => "MalformedHeader",
            Error::UnsupportedDepth(_) => "UnsupportedDepth",
            Error::TruncatedData { .. } => "TruncatedData",
            Error::BadMagic { .. } => "BadMagic",
            Error::VersionMismatch { .. } => "VersionMismatch",
            Error::LabelOverflow(_) => "LabelOverflow",
            Error::WrongChannelCount { .. } => "WrongChannelCount",
            Error::Downscale { .. } => "Downscale",
            Error::ShapeMismatch(_) => "ShapeMismatch",
            Error::IndivisibleDims { .. } => "IndivisibleDims",
            Error::StepTooLarge { .. } => "StepTooLarge",
            Error::LengthMismatch { .. } => "LengthMismatch",
            Error::InvalidParameter(_) => "InvalidParameter",
            Error::BadDims(_) => "BadDims",
            Error::BadDepth(_) => "BadDepth",
            Error::EmptyDataset => "EmptyDataset",
            Error::NonFiniteLoss(_) => "NonFiniteLoss",
            Error::SpecMismatch(_) => "SpecMismatch",
            Error::DimMismatch(_) => "DimMismatch",
            Error::EmptyList => "EmptyList",
            Error::OutOfBounds { .. } => "OutOfBounds",
            Error::CountMismatch(..) => "CountMismatch",
            Error::Config(_) => "Config",
        }
    }
}
