use thiserror::Error;

/// Errors produced by the model, chain, solver and simulator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter value is outside its admissible range.
    #[error("invalid value for `{key}`: {reason}")]
    InvalidParameter { key: &'static str, reason: String },

    /// Argument outside the mathematical domain of a function.
    #[error("domain error in {function}: {reason}")]
    Domain {
        function: &'static str,
        reason: String,
    },

    /// The enumerated state space would exceed the configured cap.
    #[error("state space of {states} states exceeds the cap of {cap}")]
    Capacity { states: usize, cap: usize },

    /// An iterative solver hit its iteration cap.
    #[error("{solver} did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence {
        solver: &'static str,
        iterations: usize,
        residual: f64,
    },

    /// Malformed key=value configuration text.
    #[error("config line {line}: {reason}")]
    Config { line: usize, reason: String },

    /// A matrix failed a structural check.
    #[error("malformed matrix: {0}")]
    Matrix(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(key: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        key,
        reason: reason.into(),
    }
}

pub(crate) fn check_probability(key: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(invalid(key, format!("must lie in [0, 1], got {value}")))
    }
}
