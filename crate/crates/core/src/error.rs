use std::fmt;

use crate::socp::SolverState;

/// Constraint of the rate-maximization problem that blocks a feasible point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Constraint {
    TagSinr,
    ApSinr,
    PowerBudget,
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Constraint::TagSinr => "tag SINR",
            Constraint::ApSinr => "AP echo SINR",
            Constraint::PowerBudget => "power budget",
        };
        f.write_str(name)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("infeasible scenario: {constraint} cannot be met ({detail})")]
    InfeasibleScenario { constraint: Constraint, detail: String },

    #[error("{stage}: subproblem solver ended in state {state:?} at iteration {iteration}")]
    Solver { stage: &'static str, iteration: usize, state: SolverState },

    #[error("scenario parse error: {0}")]
    Parse(String),

    #[error("scenario validation error: {0}")]
    Validation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// Stable machine-readable tag used in error JSON and FFI status mapping.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "invalid_argument",
            Error::InfeasibleScenario { .. } => "infeasible",
            Error::Solver { .. } => "solver_failure",
            Error::Parse(_) => "parse",
            Error::Validation(_) => "validation",
            Error::Io(_) | Error::Json(_) | Error::Csv(_) => "io",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
