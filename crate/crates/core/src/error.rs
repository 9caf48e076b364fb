use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    Domain(String),

    #[error("point ({0}, {1}) lies outside the chart box")]
    OutsideChart(f64, f64),

    #[error("sampling cannot support the requested order: {0}")]
    Sampling(String),

    #[error("boundary count {0} must be a power of two and at least 8")]
    BoundaryCount(usize),

    #[error("mesh construction failed: {0}")]
    Mesh(String),

    #[error("operator is not strongly elliptic: {0}")]
    Ellipticity(String),

    #[error("lambda = {lambda} is numerically in the spectrum ({detail})")]
    InSpectrum { lambda: Complex64, detail: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("degenerate elimination: {0}")]
    Degenerate(String),

    #[error("expression error: {0}")]
    Expr(String),

    #[error("matrix decomposition failed: {0}")]
    Decomposition(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("model cache: {0}")]
    Cache(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn dim(expected: usize, got: usize) -> Self {
        Error::Dimension { expected, got }
    }
}
