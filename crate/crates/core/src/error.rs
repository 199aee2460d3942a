use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid specification: {0}")]
    InvalidSpec(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("CFL violation: dt*max|b|/h = {cfl:.4} > 1, need dt <= {required_dt:.3e}")]
    Cfl { cfl: f64, required_dt: f64 },
    #[error(
        "Picard iteration diverged after {iterations} iterations: contraction factor {factor:.4} (measured Morrey norm {morrey:?})"
    )]
    Divergence {
        iterations: usize,
        factor: f64,
        morrey: Option<f64>,
    },
    #[error("non-finite quantity: {0}")]
    NonFinite(String),
    #[error("overlapping bump supports: {0}")]
    Overlap(String),
    #[error("quadrature failed: {0}")]
    Quadrature(String),
    #[error("too few valid runs: {valid} (need at least {needed})")]
    TooFewRuns { valid: usize, needed: usize },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Failures of the numerics themselves, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Cfl { .. }
                | Error::Divergence { .. }
                | Error::NonFinite(_)
                | Error::Quadrature(_)
                | Error::TooFewRuns { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
