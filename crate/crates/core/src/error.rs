use thiserror::Error;

/// Errors raised by the numerical kernels.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid point: {0}")]
    InvalidPoint(String),

    #[error("invalid cone: {0}")]
    InvalidCone(String),

    #[error("invalid constraint set: {0}")]
    InvalidConstraints(String),

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("operation not supported: {0}")]
    Unsupported(String),

    #[error("{method} did not converge after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence {
        method: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("not B-differentiable at requested precision (step disagreement {disagreement:.3e})")]
    NotBDifferentiable { disagreement: f64 },

    #[error("kink: subgradient set not a singleton ({0})")]
    Kink(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("audit refuted: {0}")]
    AuditRefuted(String),
}

pub type Result<T> = std::result::Result<T, Error>;
