use thiserror::Error;

/// Domain and solver failures. The variant name is the machine-readable error code
/// emitted by the command-line driver.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("argument outside the domain: {0}")]
    DomainError(String),
    #[error("moment is not finite: {0}")]
    NonfiniteMoment(String),
    #[error("variance of the truncated loss is zero at d = {d}")]
    DegenerateVariance { d: f64 },
    #[error("phi_h(Z) = {phi} is not positive; the objective has no interior minimum")]
    NonpositivePhi { phi: f64 },
    #[error("numerical integration did not converge (estimated error {error:e})")]
    NumericalFailure { error: f64 },
    #[error("existence condition violated: {0}")]
    ConditionViolated(String),
    #[error("existence condition not met: {0}")]
    ConditionNotMet(String),
    #[error("no root found: {0}")]
    NoRootFound(String),
    #[error("minimum lies on the boundary of the search grid at d = {d}")]
    NoInteriorMinimum { d: f64 },
    #[error("Monte Carlo argmin at the edge of the retention grid (d = {d})")]
    GridBoundaryMinimum { d: f64 },
    #[error("probability curve never crosses the target level: {0}")]
    NotBracketed(String),
    #[error("every loss is zero")]
    AllZero,
}

impl Error {
    /// Stable identifier used in JSON error objects.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidParameter { .. } => "InvalidParameter",
            Error::DomainError(_) => "DomainError",
            Error::NonfiniteMoment(_) => "NonfiniteMoment",
            Error::DegenerateVariance { .. } => "DegenerateVariance",
            Error::NonpositivePhi { .. } => "NonpositivePhi",
            Error::NumericalFailure { .. } => "NumericalFailure",
            Error::ConditionViolated(_) => "ConditionViolated",
            Error::ConditionNotMet(_) => "ConditionNotMet",
            Error::NoRootFound(_) => "NoRootFound",
            Error::NoInteriorMinimum { .. } => "NoInteriorMinimum",
            Error::GridBoundaryMinimum { .. } => "GridBoundaryMinimum",
            Error::NotBracketed(_) => "NotBracketed",
            Error::AllZero => "AllZero",
        }
    }

    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
