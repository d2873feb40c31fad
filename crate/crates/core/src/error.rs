use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("size guard exceeded: {what} (limit {limit})")]
    SizeGuard { what: String, limit: usize },

    #[error("site {0:?} is outside the box")]
    SiteOutside((i32, i32)),

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("eigensolver did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("autocorrelation is not exponential over the fit window (R^2 = {r_squared:.4})")]
    NonExponentialFit { r_squared: f64 },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
