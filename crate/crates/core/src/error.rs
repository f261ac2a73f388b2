use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid curve: {0}")]
    Curve(String),
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error("metric not positive definite at {at}: {detail}")]
    NotPositive { at: String, detail: String },
    #[error("operand mismatch: {0}")]
    Mismatch(String),
    #[error("unsupported configuration: {0}")]
    Unsupported(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("solver did not converge after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("bracket search for zero {k} of J_{nu} failed after {attempts} attempts")]
    Bracket { nu: u32, k: usize, attempts: usize },
    #[error("spectral truncation cannot reach tolerance {tol:.3e} with {modes} modes (bound {bound:.3e})")]
    InsufficientModes { modes: usize, tol: f64, bound: f64 },
    #[error("configuration error:\n{}", .0.join("\n"))]
    Config(Vec<String>),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("serialization: {0}")]
    Serde(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io { path: path.as_ref().display().to_string(), source }
    }
}
