use thiserror::Error;

use crate::fem::SolveError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("line {line}: bad {field}: {message}")]
    Parse { line: usize, field: &'static str, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("{context}: {source}")]
    Solve {
        context: String,
        #[source]
        source: SolveError,
    },

    #[error("size mismatch: {what} has length {got}, expected {expected}")]
    SizeMismatch { what: &'static str, got: usize, expected: usize },

    #[error("region {0} has no triangles")]
    EmptyRegion(crate::mesh::Region),

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("iteration {iteration}: {source}")]
    AtIteration {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("mesh inverted at integration step {step}")]
    TrajectoryInverted { step: usize },

    #[error("implicit {stage} stage did not converge at integration step {step}")]
    StepNotConverged { stage: &'static str, step: usize },
}

impl Error {
    pub(crate) fn solve(context: impl Into<String>, source: SolveError) -> Self {
        Error::Solve { context: context.into(), source }
    }

    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }
}
