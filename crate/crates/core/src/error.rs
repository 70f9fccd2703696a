use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error(
        "quadrature did not converge on [{lower}, {upper}]: estimate {estimate:e}, \
         error {error:e} after {intervals} intervals"
    )]
    Quadrature {
        lower: f64,
        upper: f64,
        estimate: f64,
        error: f64,
        intervals: usize,
    },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("degenerate: {0}")]
    Degenerate(String),

    #[error("invalid profile, line {line}: {message}")]
    Profile { line: usize, message: String },

    #[error("invalid input: {0}")]
    Input(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub(crate) fn require_finite(name: &str, x: f64) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Error::Domain(format!("{name} must be finite, got {x}")))
    }
}
