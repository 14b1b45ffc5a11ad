use thiserror::Error;

use crate::structure::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("signature mismatch: {0}")]
    SignatureMismatch(String),

    #[error("invalid assignment: {0}")]
    InvalidAssignment(String),

    #[error("invalid structure: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    InvalidStructure(Vec<Violation>),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error("malformed linear program: {0}")]
    MalformedLp(String),

    #[error("{what} requires {required} candidates, over the budget of {budget}")]
    BudgetExceeded {
        what: String,
        required: u128,
        budget: u128,
    },

    #[error("internal verification failure: {0}")]
    Internal(String),
}

impl Error {
    pub fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub fn is_budget(&self) -> bool {
        matches!(self, Error::BudgetExceeded { .. })
    }
}
