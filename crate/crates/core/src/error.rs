use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch between operands")]
    GridMismatch,

    #[error("field has {got} samples, grid expects {expected}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("non-finite sample at index {0}")]
    NonFinite(usize),

    #[error("exponent {0} is below 1")]
    ExponentBelowOne(f64),

    #[error("empty sequence")]
    EmptySequence,

    #[error("spectral support certificate violated: {0}")]
    Certificate(String),

    #[error("Nyquist violation at scale {scale}: support radius {radius} >= Nyquist {nyquist}")]
    Nyquist { scale: i32, radius: f64, nyquist: f64 },

    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("index {index} out of range 1..={len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("zero denominator: {0}")]
    ZeroDenominator(String),

    #[error("D_lambda bracket too wide: relative width {width:.3e} (value {value:.6e}); use a smaller n*d or more samples")]
    BracketTooWide { width: f64, value: f64 },
}
