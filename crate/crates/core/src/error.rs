use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Invalid kernel name, dimension or parameter combination.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("domain contains no grid points")]
    EmptyDomain,

    #[error("dense storage of {rows} rows exceeds the limit of {limit}; use the fft mode")]
    SizeGuard { rows: usize, limit: usize },

    #[error("operator is not Hermitian; use the numerical range instead")]
    NotHermitian,

    #[error(
        "eigensolver did not converge after {iterations} iterations \
         (best ritz values [{lambda_min}, {lambda_max}], residuals {residuals:?})"
    )]
    NoConvergence {
        iterations: usize,
        lambda_min: f64,
        lambda_max: f64,
        residuals: [f64; 2],
    },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by invalid input rather than numerical failure.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Domain(_)
                | Error::Config(_)
                | Error::LengthMismatch { .. }
                | Error::EmptyDomain
                | Error::SizeGuard { .. }
                | Error::NotHermitian
        )
    }
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

pub(crate) fn config<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}
