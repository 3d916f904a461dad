use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid camera: {0}")]
    InvalidCamera(String),
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("degenerate scene split: all camera positions coincide")]
    DegenerateSplit,
    #[error("degenerate look-at: {0}")]
    DegenerateLookAt(String),
    #[error("index {index} out of range for {len} {what}")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("image too small for SSIM: {width}x{height} (need at least 11x11)")]
    ImageTooSmall { width: usize, height: usize },
    #[error("non-finite loss at epoch {epoch}, view {view}")]
    NonFiniteLoss { epoch: usize, view: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),
    #[error("face {face} has {len} vertices; only triangles are supported")]
    NonTriangleFace { face: usize, len: usize },
    #[error("unsupported camera model {0}")]
    UnsupportedCameraModel(String),
    #[error("checkpoint version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(msg: impl Into<String>) -> Self {
        Self::Parse(msg.into())
    }
}
