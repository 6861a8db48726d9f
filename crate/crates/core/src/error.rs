use thiserror::Error;

/// Errors raised by fits and estimators.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("singular design: {0}")]
    SingularDesign(String),

    #[error("no convergence after {iterations} iterations: {reason}")]
    NonConvergence { iterations: usize, reason: String },

    #[error("infeasible constraint set: {0}")]
    Infeasible(String),

    #[error("invalid weight at unit {unit}: fitted propensity {value}")]
    InvalidWeight { unit: usize, value: f64 },

    #[error("estimator undefined: {0}")]
    Undefined(String),

    #[error("no root of the propensity extension equation on [-{bracket}, {bracket}]")]
    NoRoot { bracket: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),
}

pub type Result<T> = std::result::Result<T, Error>;
