use thiserror::Error;

/// Errors raised by the geometry, projection and stepping layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("constraint g{id} could not be evaluated at t={t}: {what}")]
    ConstraintEvaluation { id: usize, t: f64, what: String },

    #[error("invalid regularity constants: {0}")]
    InvalidConstants(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("velocity polyhedron at t={t}, q={q:?} is empty")]
    InfeasibleCone { t: f64, q: Vec<f64> },

    #[error("initial position violates g{id}: value {value:e}")]
    InfeasibleStart { id: usize, value: f64 },

    #[error("step size too large: first step violates g{id} by {margin:e}")]
    StepSizeTooLarge { id: usize, margin: f64 },

    #[error("step {step}: left prox-regular tube (distance {distance:e} >= eta {eta:e})")]
    LeftTube { step: usize, distance: f64, eta: f64 },

    #[error("step {step}: projection infeasible or not converged ({detail})")]
    ProjectionFailed { step: usize, detail: String },

    #[error("step {step} (t={t}, q={q:?}): {source}")]
    Step { step: usize, t: f64, q: Vec<f64>, source: Box<Error> },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),
}

impl Error {
    /// The innermost error, skipping step context.
    pub fn root(&self) -> &Error {
        match self {
            Error::Step { source, .. } => source.root(),
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
