use thiserror::Error;

/// Errors raised by the solvers and diagnostics.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("field shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("field contains non-finite values")]
    NonFiniteField,

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("domain error: {0}")]
    DomainError(String),

    /// The iterative linear solver hit its iteration cap. `time` is set when the
    /// failure happened inside a time-marching driver.
    #[error("linear solver diverged after {iterations} iterations (relative residual {residual:e}){}", time.map(|t| format!(" at t = {t}")).unwrap_or_default())]
    SolverDiverged {
        iterations: usize,
        residual: f64,
        time: Option<f64>,
    },

    #[error("non-finite state produced by time step")]
    BlowUp,

    #[error("insufficient snapshots: {0}")]
    InsufficientSnapshots(String),

    #[error("no grid node within radius {radius} of the ball centre")]
    EmptyBall { radius: f64 },

    #[error("trace too short: need at least {needed} iterates, got {got}")]
    TooShortTrace { needed: usize, got: usize },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// Attach a time stamp to a solver failure.
    pub fn at_time(self, t: f64) -> Self {
        match self {
            Error::SolverDiverged {
                iterations,
                residual,
                ..
            } => Error::SolverDiverged {
                iterations,
                residual,
                time: Some(t),
            },
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
