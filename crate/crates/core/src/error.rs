use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("operator is not positive semidefinite (eigenvalue {0:e})")]
    NotPsd(f64),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("optimizer did not converge (best value {best:.12}, residual {residual:e})")]
    NotConverged { best: f64, residual: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("resource limit: {0}")]
    ResourceLimit(String),

    #[error("mutual information variance {0:e} is too small")]
    DegenerateVariance(f64),

    #[error("quantum and classical brackets do not intersect: quantum [{q_lo}, {q_hi}], classical [{c_lo}, {c_hi}]")]
    EquivalenceViolation { q_lo: f64, q_hi: f64, c_lo: f64, c_hi: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
