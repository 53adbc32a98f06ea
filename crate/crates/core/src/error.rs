use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    /// A compatibility constraint (vertical-mean or divergence condition) failed;
    /// `defect` is the L2 norm of the violating part.
    #[error("compatibility condition violated ({what}): defect {defect:e}")]
    Compatibility { what: String, defect: f64 },
    #[error("time samples out of order: {last} then {next}")]
    Ordering { last: f64, next: f64 },
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("blowup detected at t = {time}")]
    Blowup { time: f64 },
    #[error("no admissible continuation step: {0}")]
    ScheduleInfeasible(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
