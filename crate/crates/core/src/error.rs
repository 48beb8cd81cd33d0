use thiserror::Error;

use crate::model::ValidationReport;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced while building or analysing systems.
///
/// Variants split into input problems (bad data, violated hypotheses) and
/// numerical failures; [`Error::is_numerical`] tells them apart.
#[derive(Debug, Error)]
pub enum Error {
    #[error("problem validation failed: {0}")]
    Validation(ValidationReport),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("problem file: key `{key}`: {message}")]
    ProblemFile { key: String, message: String },

    #[error("graph: {0}")]
    Graph(String),

    #[error("{what} is numerically singular (reciprocal condition {rcond:.3e})")]
    Singular { what: &'static str, rcond: f64 },

    #[error("state matrix is not Hurwitz (spectral abscissa {abscissa:.3e})")]
    NotHurwitz { abscissa: f64 },

    #[error("eigenvalue iteration did not converge")]
    EigenFailure,

    #[error("Lyapunov solver breakdown: residual {residual:.3e} exceeds {tolerance:.3e}")]
    SolverBreakdown { residual: f64, tolerance: f64 },

    #[error(
        "simulation diverged at step {step} (t = {time:.4}): state norm exceeded 1e12; \
         reduce dt (currently {dt}) below 2 / spectral radius"
    )]
    SimulationOverflow { step: usize, time: f64, dt: f64 },
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub fn problem_file(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::ProblemFile {
            key: key.into(),
            message: message.into(),
        }
    }

    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Singular { .. }
                | Error::NotHurwitz { .. }
                | Error::EigenFailure
                | Error::SolverBreakdown { .. }
                | Error::SimulationOverflow { .. }
        )
    }

    /// Short machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Validation(_) => "validation",
            Error::InvalidInput(_) => "invalid_input",
            Error::DimensionMismatch(_) => "dimension_mismatch",
            Error::ProblemFile { .. } => "problem_file",
            Error::Graph(_) => "graph",
            Error::Singular { .. } => "singular",
            Error::NotHurwitz { .. } => "not_hurwitz",
            Error::EigenFailure => "eigen_failure",
            Error::SolverBreakdown { .. } => "solver_breakdown",
            Error::SimulationOverflow { .. } => "simulation_overflow",
        }
    }
}
