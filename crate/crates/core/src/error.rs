use thiserror::Error;

/// Errors raised by body construction, combinations, estimators and checks.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("body is unbounded in some direction")]
    UnboundedBody,
    #[error("halfspace offset must be positive, got {0}")]
    NonpositiveOffset(f64),
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("degenerate body: affine span is not full-dimensional")]
    DegenerateBody,
    #[error("origin is not an interior point of the body")]
    OriginNotInterior,
    #[error("operation not supported in dimension {0}")]
    UnsupportedDimension(usize),
    #[error("matrix is singular (|det| = {0:e})")]
    SingularMatrix(f64),
    #[error("section is empty")]
    EmptySection,
    #[error("non-finite coordinate in input")]
    NonFinite,
    #[error("lambda out of range: {0}")]
    InvalidLambda(f64),
    #[error("exponent p out of range: {0}")]
    InvalidP(f64),
    #[error("scaling factor must be positive, got {0}")]
    NonpositiveFactor(f64),
    #[error("density is not integrable: {0}")]
    NonIntegrable(String),
    #[error("least-squares fit is ill-conditioned (condition number {0:e})")]
    IllConditionedFit(f64),
    #[error("covariance matrix is singular")]
    SingularCovariance,
    #[error("body is not in isotropic position (anisotropy {anisotropy:e}, allowed {allowed:e})")]
    NotIsotropic { anisotropy: f64, allowed: f64 },
    #[error("body is not a triangle ({0} vertices)")]
    NotATriangle(usize),
    #[error("centroid is not at the origin (distance {0:e})")]
    CentroidNotOrigin(f64),
    #[error("sampler acceptance too low")]
    AcceptanceTooLow,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("too few grid points above the noise floor ({usable} usable)")]
    InsufficientPrecision { usable: usize },
}

impl Error {
    /// Numerical failures (as opposed to bad input): estimator budgets,
    /// ill-conditioned fits and sampler breakdowns.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::IllConditionedFit(_)
                | Error::SingularCovariance
                | Error::NotIsotropic { .. }
                | Error::AcceptanceTooLow
                | Error::InsufficientPrecision { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
