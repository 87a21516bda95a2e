use thiserror::Error;

use crate::dynamics::Trajectory;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A field evaluated to NaN or infinity, or was asked for a point outside its domain.
    #[error("domain error at {coordinate}: {detail}")]
    Domain { coordinate: String, detail: String },

    #[error("derivative of order {requested} requested from a jet of order {available}")]
    Order { requested: usize, available: usize },

    #[error("phase point lies on the null section (y = 0)")]
    NullSection,

    /// Singular or indefinite metric where an inverse or a Cholesky factor is required.
    #[error("regularity error: {0}")]
    Regularity(String),

    #[error("degenerate Lagrangian: fiber Hessian is singular at {point}")]
    DegenerateLagrangian { point: String },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("degenerate parameters: {0}")]
    DegenerateParameters(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("trajectory reached the null section at t = {t}")]
    NullCrossing { t: f64, partial: Box<Trajectory> },

    #[error("step size underflow at t = {t} (h = {step})")]
    StepUnderflow {
        t: f64,
        step: f64,
        partial: Box<Trajectory>,
    },

    #[error("implicit solver did not converge at t = {t}")]
    SolverDivergence { t: f64, partial: Box<Trajectory> },

    #[error("expression error: {0}")]
    Expression(String),

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(coordinate: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::Domain {
            coordinate: coordinate.into(),
            detail: detail.into(),
        }
    }

    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    /// The partial trajectory carried by integration failures, if any.
    pub fn partial_trajectory(&self) -> Option<&Trajectory> {
        match self {
            Error::NullCrossing { partial, .. }
            | Error::StepUnderflow { partial, .. }
            | Error::SolverDivergence { partial, .. } => Some(partial),
            _ => None,
        }
    }
}
