use thiserror::Error;

use crate::expr::ParseError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("evaluation error at t = {t}: {message}")]
    Evaluation { t: f64, message: String },

    #[error("assumption violated: {0}")]
    AssumptionViolation(String),

    #[error("division by zero: {0}")]
    DivisionByZero(String),

    #[error("Hermitian symmetry violated: {0}")]
    HermitianViolation(String),

    #[error("kernel degenerate: {0}")]
    KernelDegenerate(String),

    #[error("singular covariance: {0}")]
    SingularCovariance(String),

    #[error("quadrature did not converge: relative change {achieved:e} after {levels} refinement levels")]
    QuadratureFailure { achieved: f64, levels: usize },

    #[error("degenerate cell {cell}: q(t_i) - q(t_(i-1)) = {increment:e}")]
    DegenerateCell { cell: usize, increment: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("path grid must start at 0 and end at 1")]
    GridMissingEndpoints,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid spec: {0}")]
    InvalidSpec(String),
}

pub type Result<T> = std::result::Result<T, Error>;
