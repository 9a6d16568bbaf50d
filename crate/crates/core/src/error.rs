use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not positive definite (pivot {index} = {pivot:e})")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    #[error("Jacobi eigensolver did not converge within {sweeps} sweeps")]
    NoConvergence { sweeps: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("lambda = {lambda:e} is (numerically) an eigenvalue; log of |Phi| undefined")]
    EvalAtEigenvalue { lambda: f64 },

    #[error("smallest eigenvalue is degenerate (gap {gap:e}); gradient undefined")]
    DegenerateEigenvalue { gap: f64 },

    #[error("grid oracle limited to n*m <= 4, got {dims}")]
    GridTooLarge { dims: usize },

    #[error("|lambda|^n overflows f64 for lambda = {lambda:e}, n = {n}")]
    OverflowRisk { lambda: f64, n: usize },

    #[error("invalid objective: {0}")]
    InvalidObjective(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
