use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("parametric instability: lambda = {lambda} must stay below {limit}")]
    Unstable { lambda: f64, limit: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("solver did not converge: {0}")]
    NoConvergence(String),

    #[error("steady state is not unique: {0}")]
    NonUniqueNullspace(String),

    #[error("state is not positive semidefinite (min eigenvalue {0:e})")]
    NotPositive(f64),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for failures of iterative or root-finding procedures, as opposed
    /// to invalid inputs.
    pub fn is_convergence(&self) -> bool {
        matches!(self, Error::NoConvergence(_) | Error::NonUniqueNullspace(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
