use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DcatError {
    #[error("invalid Fock dimension {dim}: at least 2 levels are required")]
    InvalidDimension { dim: usize },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("truncation tail {tail:.3e} exceeds tolerance {tol:.1e} at dim {dim}; need dim >= {required_dim}")]
    Truncation {
        tail: f64,
        tol: f64,
        dim: usize,
        required_dim: usize,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("operator is not Hermitian: max deviation {deviation:.3e}")]
    NotHermitian { deviation: f64 },

    #[error("time stepping did not converge after {steps} steps: last two iterates differ by {distance:.3e}")]
    Convergence { steps: usize, distance: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, DcatError>;
