use thiserror::Error;

/// Errors raised by the pilot design library.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is not positive definite even after jitter ({context})")]
    NotPositiveDefinite { context: String },

    #[error(
        "power multiplier bisection did not converge for user {user} after {halvings} halvings"
    )]
    BisectionFailed { user: usize, halvings: usize },

    #[error("linear program at Dinkelbach iteration {iteration} ended with status {status:?}")]
    LinearProgram {
        iteration: usize,
        status: crate::solvers::LpStatus,
    },
}

pub type Result<T, E = CoreError> = std::result::Result<T, E>;
