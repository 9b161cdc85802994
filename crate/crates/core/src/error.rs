use num_complex::Complex64;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid potential: {0}")]
    InvalidPotential(String),
    #[error("translation unsupported: {0}")]
    TranslationUnsupported(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("invalid spectral parameter: {0}")]
    InvalidLambda(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("unresolved singularity: {0}")]
    UnresolvedSingularity(String),
    #[error("quadrature error estimate {estimate:.3e} exceeds threshold {threshold:.3e}")]
    QuadratureTolerance { estimate: f64, threshold: f64 },
    #[error(
        "non-convergent at lambda = {lambda}: relative residual {residual:.3e}; lambda likely in exceptional set E"
    )]
    NonConvergent { lambda: Complex64, residual: f64 },
    #[error("determinant unavailable at this resolution: {0}")]
    DenseUnavailable(String),
    #[error("oscillation wavelength {wavelength:.4} is below 4 grid cells ({min:.4}) at lambda = {lambda}")]
    Aliasing {
        lambda: Complex64,
        wavelength: f64,
        min: f64,
    },
    #[error("report: {0}")]
    Report(String),
    #[error("malformed file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
