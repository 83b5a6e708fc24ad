use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input")]
    EmptyInput,

    #[error("non-finite value at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("indefinite B")]
    IndefiniteB,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate neighborhood")]
    DegenerateNeighborhood,

    #[error("{0}")]
    Singular(String),

    #[error("degenerate statistic distribution")]
    DegenerateDistribution,

    #[error("threshold search did not converge after {0} iterations")]
    NonConvergence(usize),

    #[error("orthonormality violated (residual {0:e})")]
    OrthonormalityViolated(f64),

    #[error("unstable configuration at t = {time:.3} min")]
    UnstableConfiguration { time: f64 },

    #[error("row {row}: {message}")]
    Csv { row: usize, message: String },

    #[error("model format: {0}")]
    Format(String),

    #[error("unsupported model version {found} (expected {expected})")]
    Version { expected: u32, found: u32 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
