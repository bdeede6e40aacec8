use thiserror::Error;

/// Errors produced by state, channel and solver constructors.
#[derive(Debug, Error)]
pub enum CgpoError {
    #[error("dimension budget exceeded: requested {requested}, budget {budget}")]
    DimensionBudget { requested: usize, budget: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("invalid Hamiltonian: {0}")]
    InvalidHamiltonian(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("unknown subsystem: {0}")]
    UnknownSubsystem(String),

    #[error("{0}")]
    InvalidArgument(String),

    #[error("projection failed to converge after {0} iterations")]
    ProjectionFailed(usize),
}

pub type Result<T> = std::result::Result<T, CgpoError>;
