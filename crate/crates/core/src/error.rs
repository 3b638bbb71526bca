use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("degenerate triangle {0} (zero or negative area)")]
    DegenerateElement(usize),

    #[error("element index {index} out of range (mesh has {len} elements)")]
    ElementOutOfRange { index: usize, len: usize },

    #[error("unsupported quadrature degree {0} (supported: 1..=10)")]
    UnsupportedQuadrature(usize),

    #[error("unsupported polynomial degree k={0}; only k=0 is implemented")]
    UnsupportedDegree(usize),

    #[error("perturbation parameter t={0} must lie in (0, 1]")]
    InvalidParameter(f64),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not positive definite (pivot {pivot} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },

    #[error("problem has no exact solution")]
    ExactSolutionUnavailable,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
