use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{op}: dimension mismatch ({}x{} vs {}x{})", .left.0, .left.1, .right.0, .right.1)]
    DimensionMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("{op}: input contains non-finite values")]
    NonFinite { op: &'static str },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("jacobi svd did not converge after {sweeps} sweeps (off-diagonal residual {residual:.3e})")]
    SvdNoConvergence { sweeps: usize, residual: f64 },

    #[error("solver did not converge within {iterations} iterations (last residual {:.3e})", .residuals.last().copied().unwrap_or(f64::NAN))]
    NotConverged {
        iterations: usize,
        residuals: Vec<f64>,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
