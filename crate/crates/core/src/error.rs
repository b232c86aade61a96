use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0} vs {1}")]
    Dimension(usize, usize),

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("solver did not converge after {iterations} iterations (last gap {gap:e})")]
    NonConvergence { iterations: usize, gap: f64 },

    #[error("convexity hypothesis violated: rho = {rho} is not > -1/2")]
    HypothesisViolation { rho: f64 },

    #[error("ambiguous geodesic: {0}")]
    Ambiguous(String),

    #[error("constraint violation: {0}")]
    Constraint(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("linear algebra failure: {0}")]
    LinearAlgebra(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
