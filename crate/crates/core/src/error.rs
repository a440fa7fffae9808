use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("invalid disaggregation plan: {0}")]
    InvalidPlan(String),

    #[error("graph is disconnected")]
    Disconnected,

    #[error("domain error: {0}")]
    Domain(String),

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("singular system: {0}")]
    Singular(String),

    #[error("graph has {n} vertices; brute force is limited to {max}, use the eigenvalue bounds instead")]
    TooLarge { n: usize, max: usize },

    #[error("right-hand side is inconsistent: <b, 1>/|b| = {0:e}")]
    Inconsistent(f64),

    #[error("null spaces of the preconditioner and the operator do not match")]
    NullSpaceMismatch,

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("graph generation failed: {0}")]
    Generation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
