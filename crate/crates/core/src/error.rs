use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("kernel entry w({n},{m}) has norm {norm:.6e}, exceeding C e^(-gamma(|n|+|m|)) = {bound:.6e}")]
    AssumptionViolation { n: i64, m: i64, norm: f64, bound: f64 },

    #[error("resolvent kernel is singular at lambda = 0")]
    Singularity,

    #[error("point {point} is outside the continuation disk of radius {radius}")]
    OutsideContinuation { point: Complex64, radius: f64 },

    #[error("contour passes through a characteristic value near {point} (condition number {condition:.3e})")]
    ContourHitsValue { point: Complex64, condition: f64 },

    #[error("insufficient contour resolution: argument jump {jump:.3} rad between adjacent nodes ({nodes} nodes)")]
    InsufficientResolution { jump: f64, nodes: usize },

    #[error("non-integral index {raw} (residual {residual:.3e}) after refining to {nodes} nodes")]
    NonIntegralIndex { raw: Complex64, residual: f64, nodes: usize },

    #[error("Mobius map denominator vanishes (|1 - lambda th(2 theta)| = {0:.3e})")]
    MobiusDomain(f64),

    #[error("Fourier grid too coarse: trailing coefficient mass {ratio:.3e} of total")]
    Aliasing { ratio: f64 },

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("Riesz contour around {point} does not separate the spectrum (eigenvalue at distance {distance:.3e}, radius {radius:.3e})")]
    ContourSeparation { point: Complex64, distance: f64, radius: f64 },

    #[error("eigensolver failed: {0}")]
    Eigensolver(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("malformed perturbation spec: {0}")]
    Spec(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Validation errors are the caller's fault; everything else is a numerical failure.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter(_)
                | Error::DimensionMismatch { .. }
                | Error::AssumptionViolation { .. }
                | Error::OutsideContinuation { .. }
                | Error::Unsupported(_)
                | Error::Spec(_)
                | Error::Json(_)
        )
    }
}
