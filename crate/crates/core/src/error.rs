use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid raster: {0}")]
    InvalidRaster(String),

    #[error("invalid kernel: {rows}x{cols} (both dimensions must be odd and non-zero)")]
    InvalidKernel { rows: usize, cols: usize },

    #[error("dimension mismatch: expected {expected:?}, got {actual:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },

    #[error("file not found: {0}")]
    MissingFile(PathBuf),

    #[error("unsupported image format: {0}")]
    UnsupportedFormat(String),

    #[error("malformed image data in {path}: {reason}")]
    MalformedImage { path: PathBuf, reason: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("histogram is degenerate (fewer than two occupied bins)")]
    DegenerateHistogram,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("all spectral coefficients are zero")]
    ZeroSpectrum,

    #[error("subband exhausted: no unsuppressed coefficient left")]
    Exhausted,

    #[error("no vertical tower line detected")]
    NoTowerLine,

    #[error("training diverged at epoch {epoch} (loss is not finite)")]
    Diverged { epoch: usize },

    #[error("empty dataset")]
    EmptyDataset,

    #[error("model file error: {0}")]
    ModelFormat(String),

    #[error("sensor reading {value} m outside range [{min}, {max}] m")]
    OutOfRange { value: f64, min: f64, max: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True when the failure stems from the caller's inputs (paths, files,
    /// configuration) rather than from processing.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::MissingFile(_)
                | Error::UnsupportedFormat(_)
                | Error::MalformedImage { .. }
                | Error::Io(_)
                | Error::Config(_)
                | Error::ModelFormat(_)
                | Error::Json(_)
                | Error::InvalidParameter(_)
                | Error::OutOfRange { .. }
        )
    }
}
