use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid potential: {0}")]
    InvalidPotential(String),
    #[error("non-integral breakpoint at h = {0}")]
    NonIntegralBreakpoint(f64),
    #[error("potential is not convex: {0}")]
    NonConvex(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("labeling is infeasible: {0}")]
    InfeasibleLabeling(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("solver diverged at iteration {iter}: {what}")]
    NonFinite { iter: usize, what: String },
    #[error("search space too large: {0} labelings")]
    SearchSpace(f64),
    #[error("non-monotone cut at node {0}")]
    NonMonotoneCut(usize),
    #[error("malformed file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
