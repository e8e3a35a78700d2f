use thiserror::Error;

/// Errors raised while building or certifying wavelets.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum WaveletError {
    #[error("infeasible wavelet parameters: {0}")]
    Infeasible(String),
    #[error("singular moment system for vanishing={vanishing}, smoothness={smoothness}")]
    SingularMomentSystem { vanishing: u32, smoothness: u32 },
    #[error("wavelet certification failed: {0}")]
    Certification(String),
    #[error("admissibility quadrature did not converge: {0}")]
    NonConvergent(String),
    #[error("invalid piecewise polynomial: {0}")]
    InvalidShape(String),
}

/// Errors raised by the transform and leader machinery.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("invalid signal: {0}")]
    InvalidSignal(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("scale {scale} is below the resolution limit {limit} (two samples under the support)")]
    ScaleBelowResolution { scale: f64, limit: f64 },
    #[error("region not covered by the time-scale plane: {0}")]
    Coverage(String),
    #[error("p = {0} is outside (1, inf); the wavelet characterization of L^p needs p > 1")]
    InvalidP(f64),
    #[error("insufficient scale coverage: {0}")]
    InsufficientScales(String),
    #[error("insufficient dyadic depth: {0}")]
    InsufficientDepth(String),
    #[error("exponent estimation failed: {0}")]
    Estimation(String),
    #[error("plane format error: {0}")]
    Format(String),
}

/// Errors raised by the pulse process and spectrum utilities.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid process parameters: {0}")]
    InvalidParams(String),
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    #[error("p = {p} outside ({lo}, {hi:.4})")]
    POutOfRange { p: f64, lo: f64, hi: f64 },
    #[error("empty input: {0}")]
    Empty(String),
}

/// Top-level error used by the CLI and the acceptance runner.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Wavelet(#[from] WaveletError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
