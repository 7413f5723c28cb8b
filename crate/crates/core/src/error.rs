use thiserror::Error;

/// Errors raised by the formation toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FormationError {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("dimension mismatch for {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("unsupported spatial dimension {0} (expected 2 or 3)")]
    InvalidDimension(usize),

    #[error("index {index} out of range 1..={max}")]
    IndexOutOfRange { index: usize, max: usize },

    #[error("convention violated: {0}")]
    ConventionViolated(String),

    #[error("degenerate framework: {0}")]
    Degenerate(String),

    #[error("unknown shape '{0}'")]
    UnknownShape(String),

    #[error("invalid scale {0}: must be finite and positive")]
    InvalidScale(f64),

    #[error("inconsistent shape: {0}")]
    InconsistentShape(String),

    #[error("singular edge {edge}: |z| = {norm:e} is below the l=1 threshold")]
    Singularity { edge: usize, norm: f64 },

    #[error("infeasible motion design: residual {residual:e} exceeds tolerance {tolerance:e}")]
    Infeasible { residual: f64, tolerance: f64 },

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("frame rotation is not a proper orthogonal matrix")]
    NonOrthogonalFrame,

    #[error("simulation aborted at t = {t}: {reason}; state = {state:?}")]
    SimulationAborted {
        t: f64,
        reason: String,
        state: Vec<f64>,
    },

    #[error("too few samples: need at least {needed}, have {have}")]
    TooFewSamples { needed: usize, have: usize },
}

pub type Result<T> = std::result::Result<T, FormationError>;
