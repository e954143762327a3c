use sot_lp::LpError;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SotError {
    #[error("measure {index} is not a probability vector: {reason}")]
    NonProbability { index: usize, reason: String },
    #[error("support is empty after dropping points with zero mean mass")]
    EmptySupport,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("column {0} of the plan carries no mass")]
    ZeroColumn(usize),
    #[error("fixed-target program reported infeasible; constraint assembly is inconsistent")]
    InternalInfeasible,
    #[error("embedded points do not average to the simplex center (residual {residual:e})")]
    BarycenterIdentityViolated { residual: f64 },
    #[error("subset enumeration cap exceeded: {0}")]
    EnumerationCapExceeded(String),
    #[error("no mixing candidate found; the family data is corrupt")]
    NoCandidate,
    #[error("density is not supported on [0, 1] (domain [{lo}, {hi}])")]
    NotOnUnitInterval { lo: f64, hi: f64 },
    #[error("density has zero total mass")]
    ZeroMass,
    #[error("step function leaves [0, 1]: value {0}")]
    BadRange(f64),
    #[error("cost oscillation {oscillation:e} exceeds epsilon {epsilon:e} at the finest admissible subdivision")]
    ResolutionTooCoarse { oscillation: f64, epsilon: f64 },
    #[error("problem too large: {0}")]
    TooLarge(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("linear program failed: {0}")]
    Lp(#[from] LpError),
}

pub type Result<T, E = SotError> = std::result::Result<T, E>;
