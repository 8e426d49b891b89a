//! Crate-wide error type.

/// Errors produced by configuration validation, infeasible inputs, and
/// numerical routines.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    /// A system or experiment parameter violates a model invariant.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// A cache storage allocation violates bounds, ordering, or capacity.
    #[error("infeasible cache allocation: {0}")]
    InfeasibleAllocation(String),

    /// A subproblem was requested outside its feasible parameter region.
    #[error("infeasible subproblem: {0}")]
    InfeasibleSubproblem(String),

    /// A numerical routine failed to reach its accuracy target.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// A truncated distribution left more probability mass in the tail
    /// than the caller allowed.
    #[error("truncation tail mass {tail:.3e} exceeds allowed {limit:.3e}; raise k_max")]
    TruncationTail { tail: f64, limit: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
