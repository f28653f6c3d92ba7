use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    /// Bisection reached its population ceiling without a passing size.
    #[error("no passing population size up to n_max = {n_max} (last failing n = {last_failing})")]
    InfeasibleAtBudget { last_failing: usize, n_max: usize },

    #[error("wall-clock deadline exceeded")]
    DeadlineExceeded,

    #[error("usage: {0}")]
    Usage(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
