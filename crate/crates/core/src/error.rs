use alloc::string::String;

/// Errors raised by the field calculus, constitutive law, solver and checks.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("exponent function is not differentiable at c = {c}")]
    NonDifferentiable { c: f64 },
    #[error("degenerate pair: D1 = D2")]
    DegeneratePair,
    #[error("degenerate direction: B = 0")]
    DegenerateDirection,
    #[error("comparison bracket closed at t = {t} (bracket = {bracket})")]
    BlowUpBeforeT { t: f64, bracket: f64 },
    #[error("blow-up detected at t = {t}: {reason}")]
    BlowUpDetected { t: f64, reason: String },
    #[error("run report is empty")]
    EmptyRun,
    #[error("need at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },
    #[error("field is under-resolved: spectral tail ratio {tail:e}")]
    UnderResolved { tail: f64 },
    #[error("fit failed: {0}")]
    FitFailure(String),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
