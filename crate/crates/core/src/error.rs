use thiserror::Error;

/// Errors raised by sampling, spectral kernels, contour quadrature and the
/// experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("eigenvalue iteration failed to converge at index {index}")]
    NoConvergence { index: usize },

    #[error("evaluation point {point} coincides with an eigenvalue")]
    Singularity { point: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate spectral gap {gap:e} below {threshold:e}")]
    DegenerateGap { gap: f64, threshold: f64 },

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("root bracketing failed: {0}")]
    Bracketing(String),

    #[error("steepest-descent trace left the bounding box at height {height}")]
    TraceEscaped { height: f64 },

    #[error("residue sum ill-conditioned (condition estimate {condition:e})")]
    IllConditioned { condition: f64 },

    #[error("{what}: {source}")]
    Io {
        what: String,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("config error at {field}: {message}")]
    Config { field: String, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn io(what: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            what: what.into(),
            source,
        }
    }
}
