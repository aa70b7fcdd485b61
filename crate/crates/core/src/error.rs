use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("field does not live on this grid (expected {expected} values, got {got})")]
    ShapeMismatch { expected: usize, got: usize },

    #[error("field contains a non-finite value at node {0}")]
    NonFinite(usize),

    #[error("half-plane with normal angle {0} does not map grid nodes to grid nodes")]
    NotNodePreserving(f64),

    #[error("field is identically zero")]
    ZeroField,

    #[error("g is not differentiable at t = 0 for a power law with alpha = {0} <= 1")]
    NonDifferentiable(f64),

    #[error("cannot project the initial field onto the constraint set: {0}")]
    InfeasibleInit(String),

    #[error("solver did not converge after {iterations} iterations (gradient norm {grad_norm:e})")]
    NotConverged { iterations: usize, grad_norm: f64 },

    #[error("degenerate competitor: {0}")]
    DegenerateCompetitor(String),

    #[error("root bracketing failed for J_{n}' (k = {k})")]
    Bracketing { n: u32, k: u32 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
