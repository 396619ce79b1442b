use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The Euler recursion produced a non-finite state.
    #[error("solver failure at step {step}: {reason}")]
    Solver { step: usize, reason: String },

    /// A solved path left the a-priori Gronwall envelope.
    #[error("a-priori bound violated at step {step}: |x| = {value} > {bound}")]
    AprioriViolation { step: usize, value: f64, bound: f64 },

    /// Too many Monte Carlo replicas failed for the estimate to be trusted.
    #[error("{failed} of {total} replicas failed (first: {first})")]
    ReplicaFailures {
        failed: usize,
        total: usize,
        first: String,
    },

    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
