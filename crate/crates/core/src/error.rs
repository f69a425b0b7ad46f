use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("field has {got} values but the grid holds {expected} nodes")]
    LengthMismatch { expected: usize, got: usize },

    #[error("non-finite value {value} at node {index}")]
    NonFinite { index: usize, value: f64 },

    #[error("invalid sources: {0}")]
    InvalidSources(String),

    #[error("axis {axis} has {len} nodes, need at least {min}")]
    DimensionTooSmall { axis: usize, len: usize, min: usize },

    #[error("operation needs a {expected}D field, got {got}D")]
    WrongDimension { expected: usize, got: usize },

    #[error("reference value is zero at included node {index}")]
    ZeroReference { index: usize },

    #[error("forcing function must be bounded away from zero: value {value} at node {index}")]
    NonPositiveForcing { index: usize, value: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("kernel is singular at r = 0 and no origin regularization applies")]
    SingularKernel,

    #[error("FFT result has imaginary residue {ratio:e} relative to its real part")]
    ImaginaryResidue { ratio: f64 },

    #[error(
        "wave function fell below the positivity floor at every node; \
         hbar is too small for double precision, try a larger tau scaling"
    )]
    Underflow,

    #[error("solver did not converge in {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("malformed input: {0}")]
    Parse(String),

    #[error("point ({x}, {y}) lies outside the grid")]
    OutsideGrid { x: f64, y: f64 },

    #[error("image has no traversable pixels")]
    NoTraversableRegion,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
