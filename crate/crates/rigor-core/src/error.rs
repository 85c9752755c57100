use thiserror::Error;

/// Errors surfaced by rigorous computations.
///
/// A returned error always means "no certificate", never "wrong certificate":
/// every code path either produces a valid enclosure or fails loudly.
#[derive(Debug, Clone, Error)]
pub enum RigorError {
    #[error("division by an enclosure containing zero")]
    DivisionByZeroEnclosure,

    #[error("domain error: {0}")]
    DomainError(String),

    #[error("matrix inverse not verifiable: ||I - W*Q|| = {beta} >= 1")]
    NotVerifiablyInvertible { beta: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("subdivision budget exceeded ({visited} boxes, width {width})")]
    BudgetExceeded { visited: u64, width: f64 },

    #[error("tail eigenvalues not dissipative: Re lambda_n = {value} >= 0 at n = {n}")]
    TailNotDissipative { n: i64, value: f64 },

    #[error("contraction bound Z = {z} >= 1 ({detail})")]
    ZExceedsOne { z: f64, detail: String },

    #[error("radii inequalities infeasible: {0}")]
    Infeasible(String),

    #[error("time step {step} infeasible: {detail}")]
    StepInfeasible { step: usize, detail: String },

    #[error("approximate inverse is singular: {0}")]
    SingularApproxInverse(String),

    #[error("numerical simulation produced NaN/overflow: {0}")]
    NumericsBlewUp(String),

    #[error("invalid parameter: {0}")]
    InvalidParams(String),
}
