use thiserror::Error;

/// Crate-wide error type. Variants split into two families: configuration
/// errors (rejected inputs, exit code 1) and numerical failures discovered
/// while computing (exit code 2).
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("series did not converge after {terms} terms (last |term| {last_term:.3e})")]
    SeriesNotConverged { terms: usize, last_term: f64 },

    #[error("integrator step size underflow at u = {u:.6e} (step {step:.3e})")]
    StepUnderflow { u: f64, step: f64 },

    #[error("integrator exceeded {0} steps")]
    MaxStepsExceeded(usize),

    #[error("non-finite value produced at u = {0:.6e}")]
    NonFinite(f64),

    #[error("density {value:.6e} at t = {t:.6e} is negative beyond tolerance")]
    NegativeDensity { t: f64, value: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidConfig(msg.into())
    }

    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// Short machine-readable code, stable across releases.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidConfig(_) => "invalid_config",
            Error::Domain(_) => "domain",
            Error::Io(_) => "io",
            Error::SeriesNotConverged { .. } => "series_not_converged",
            Error::StepUnderflow { .. } => "step_underflow",
            Error::MaxStepsExceeded(_) => "max_steps",
            Error::NonFinite(_) => "non_finite",
            Error::NegativeDensity { .. } => "negative_density",
            Error::Numerical(_) => "numerical",
        }
    }

    /// Process exit code: 1 for rejected inputs, 2 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidConfig(_) | Error::Domain(_) | Error::Io(_) => 1,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
