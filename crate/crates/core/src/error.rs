use thiserror::Error;

/// Errors produced anywhere in the cone laboratory.
#[derive(Debug, Error)]
pub enum ConeError {
    /// A point outside the representable domain, e.g. the conical point `x1 = 0`.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    /// NaN or infinity where a finite value is required.
    #[error("non-finite value: {0}")]
    Numeric(String),

    /// The exponent guard tripped: some `alpha * s^2` (or similar) exceeded the limit.
    #[error("overflow guard tripped in {context}: exponent argument {argument:.6e} exceeds {limit}")]
    Range {
        context: &'static str,
        argument: f64,
        limit: f64,
    },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("{method} did not converge after {iterations} iterations (residual {residual:.3e})")]
    Solver {
        method: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("grid resolution insufficient: {0}")]
    Resolution(String),

    #[error("support does not fit the grid: {0}")]
    SupportOverflow(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = ConeError> = std::result::Result<T, E>;
