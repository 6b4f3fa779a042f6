use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("splice error: {0}")]
    Splice(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("length error: need at least {needed} observations, got {got}")]
    Length { needed: usize, got: usize },

    #[error("degenerate variance: {0}")]
    DegenerateVariance(String),

    #[error("divergent exponent: all tail samples equal x_min")]
    DivergentExponent,

    #[error("sparse tail: need at least {needed} samples, got {got}")]
    Sparsity { needed: usize, got: usize },

    #[error("degenerate detrend: residual fluctuation vanishes at window size {0}")]
    DegenerateDetrend(usize),

    #[error("lag error: lag {lag} outside [2, {max}]")]
    Lag { lag: usize, max: usize },

    #[error("degenerate range: pooled samples have zero width")]
    DegenerateRange,

    #[error("undefined divergence: p > 0 where q = 0 at bin {0}")]
    UndefinedDivergence(usize),

    #[error("incompatible histograms: {0}")]
    IncompatibleHistogram(String),

    #[error("singular design matrix (condition number {0:.3e})")]
    SingularDesign(f64),

    #[error("degenerate exports: all product values are zero")]
    DegenerateExports,

    #[error("coverage error: {0}")]
    Coverage(String),

    #[error("split error: cannot split {days} days into {periods} periods")]
    Split { days: usize, periods: usize },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by a bad configuration rather than bad input data.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_) | Error::Split { .. } | Error::Lag { .. })
    }
}
