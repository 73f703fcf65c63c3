use thiserror::Error;

/// Errors raised by the simulation and post-processing kernels.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{what} = {value} is outside the valid domain ({domain})")]
    OutOfDomain {
        what: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("pass geometry: {0}")]
    Geometry(String),

    #[error("quadrature did not reach relative tolerance {tol} on [{a}, {b}]")]
    Quadrature { a: f64, b: f64, tol: f64 },

    #[error("cutoff {cutoff_hz} Hz is not below the Nyquist frequency {nyquist_hz} Hz")]
    FilterCutoff { cutoff_hz: f64, nyquist_hz: f64 },

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("no 4-cycle-free circulant assignment found for lift {lift} after {attempts} attempts")]
    Girth { lift: usize, attempts: usize },

    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
