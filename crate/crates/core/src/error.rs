use thiserror::Error;

/// Errors produced by the numerical engines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid spectral density: {0}")]
    InvalidSpectrum(String),

    #[error("singular system: pivot {pivot:.3e} at row {row}")]
    SingularSystem { row: usize, pivot: f64 },

    #[error("residual check failed: relative residual {residual:.3e} exceeds {tolerance:.1e}")]
    ResidualTooLarge { residual: f64, tolerance: f64 },

    #[error("implicit step failed at node {node}")]
    StepFailure { node: usize },

    #[error("t = {t} lies outside the tabulated range [{start}, {end}]")]
    OutOfRange { t: f64, start: f64, end: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("propagation diverged at step {step} (t = {t}): {reason}")]
    PropagationDiverged { step: usize, t: f64, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;
