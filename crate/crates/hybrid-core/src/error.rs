use thiserror::Error;

/// Errors raised by the solvers and transfer operators.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("stability violation: {0}")]
    StabilityViolation(String),

    #[error("negative population {value:e} at node {node}, direction {direction}")]
    Negativity { node: usize, direction: usize, value: f64 },

    #[error("infeasible boundary flux at node {node}: {detail}")]
    InfeasibleFlux { node: usize, detail: String },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("linear solver failure: {0}")]
    Solver(String),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("point ({x}, {y}) is outside the mesh (nearest element {nearest})")]
    OutOfDomain { x: f64, y: f64, nearest: usize },

    #[error("infeasible chemical state: {0}")]
    InfeasibleState(String),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Wraps the error with a location description.
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context { context: context.into(), source: Box::new(self) }
    }

    /// Innermost error, skipping context layers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Context { source, .. } => source.root(),
            e => e,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
