//! Shared error type for the optimization core.

/// Errors surfaced by the numeric core.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: {detail}")]
    DimMismatch { op: &'static str, detail: String },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("power iteration did not converge after {iters} iterations; best estimate {estimate:e}")]
    PowerIteration { iters: usize, estimate: f64 },

    #[error("backtracking exhausted {0} shrink steps without satisfying the Armijo condition")]
    ArmijoExhausted(usize),

    #[error("search direction is not a descent direction (grad . d = {0:e})")]
    NotDescent(f64),

    #[error("one-dimensional minimization failed: {0}")]
    LineMinimization(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("checkpoint rejected: {0}")]
    Checkpoint(String),

    #[error("malformed data: {0}")]
    Parse(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
