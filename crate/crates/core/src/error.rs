use thiserror::Error;

use crate::linalg::Label;

/// Errors raised by the linear algebra, state, and solver layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("subsystem label {0} is not present in {1}")]
    UnknownLabel(Label, String),

    #[error("logarithm undefined: eigenvalue {0:e} is not positive")]
    LogDomain(f64),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("map is not completely positive (min Choi eigenvalue {0:e})")]
    NotCompletelyPositive(f64),

    #[error("degenerate instance: I(X;Y) = {0:e} nats")]
    DegenerateInstance(f64),

    #[error("no feasible channel: {0}")]
    Infeasible(Infeasibility),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

/// Why a constrained search returned nothing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Infeasibility {
    /// The relevance target exceeds the data-processing ceiling.
    TargetAboveCeiling(f64),
    /// The budget ran out; carries the best relevance fraction seen and the
    /// work spent (objective evaluations or solver iterations).
    BudgetExhausted { best_j: f64, evals: u64 },
}

impl std::fmt::Display for Infeasibility {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Infeasibility::TargetAboveCeiling(j) => {
                write!(f, "target J = {j} exceeds 1 (data processing)")
            }
            Infeasibility::BudgetExhausted { best_j, evals } => {
                write!(f, "budget exhausted after {evals} evaluations, best J reached = {best_j:.6}")
            }
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
