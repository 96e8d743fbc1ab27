use alloc::string::String;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("singular metric: {what} has condition number {condition:e}")]
    SingularMetric { what: &'static str, condition: f64 },

    #[error("point outside the model domain: {0}")]
    DomainError(String),

    #[error("dimension mismatch: {0}")]
    DimensionError(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("adaptive step size underflow at t = {t} (h = {h:e})")]
    StepFailure { t: f64, h: f64 },

    #[error("initial control {state:?} does not match the signal value {signal:?} at t0")]
    InitialControlMismatch {
        state: alloc::vec::Vec<f64>,
        signal: alloc::vec::Vec<f64>,
    },

    #[error("force model has no potential")]
    MissingPotential,

    #[error("shooting diverged after {iterations} iterations (residual {residual:e})")]
    ShootingDiverged { iterations: usize, residual: f64 },

    #[error("chart is not U-orthonormal at the base point (deviation {deviation:e})")]
    ChartNotOrthonormal { deviation: f64 },

    #[error("graph control leaves the unit hemisphere at s = {s} (defect {defect:e})")]
    SphereViolation { s: f64, defect: f64 },

    #[error("time component of the graph control vanishes (min a0 = {min_a0:e})")]
    ZeroTimeComponent { min_a0: f64 },

    #[error("not an equilibrium: residual {residual:e}")]
    NotAnEquilibrium { residual: f64 },

    #[error("selection leaves the cone: support violation {violation:e}")]
    SelectionOutsideCone { violation: f64 },

    #[error("frequencies {0} and {1} are (nearly) commensurate")]
    ResonantPlan(f64, f64),

    #[error("linearization is not controllable (rank {rank} < {dim})")]
    UncontrollableLinearization { rank: usize, dim: usize },

    #[error("nonlinear solve failed: {0}")]
    SolveFailed(String),
}

pub type Result<T> = core::result::Result<T, Error>;
