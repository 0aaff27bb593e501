use std::path::PathBuf;

/// Errors raised by the Steklov laboratory.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("boundary tagging failed: {0}")]
    Tagging(String),

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("degenerate triangle {triangle}: signed area {area:e}")]
    DegenerateTriangle { triangle: usize, area: f64 },

    #[error("no boundary edges carry the {0} tag")]
    EmptyBoundary(&'static str),

    #[error("factorization failed: {0}")]
    Factorization(String),

    #[error("zero boundary norm: the field has a vanishing trace on the Steklov boundary")]
    ZeroDenominator,

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("optimization did not converge: best max relative error {residual:e} after {iterations} iterations")]
    Optimization { residual: f64, iterations: usize, best_lengths: Vec<f64> },

    #[error("cannot embed graph: {0}")]
    Embedding(String),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("insufficient resolution: {0}")]
    Resolution(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("unsupported case: {0}")]
    Unsupported(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("configuration error: {0}")]
    Config(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
