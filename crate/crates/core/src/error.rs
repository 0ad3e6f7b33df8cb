use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid body: {0}")]
    InvalidBody(String),

    #[error("domain spec error at `{path}`: {reason}")]
    DomainSpec { path: String, reason: String },

    #[error("projection did not converge after {iterations} iterations (residual {residual:e})")]
    ProjectionDiverged { iterations: usize, residual: f64 },

    #[error("point is not within {tol:e} of the boundary (distance {distance:e})")]
    NotNearBoundary { distance: f64, tol: f64 },

    #[error("no active boundary face at the given point")]
    ZeroActiveSet,

    #[error("diameter unavailable: {0}")]
    DiameterUnavailable(String),

    #[error("sampling failed: {0}")]
    Sampling(String),

    #[error("series tolerance {tol:e} unreachable within {budget} terms")]
    SeriesBudget { tol: f64, budget: usize },

    #[error("quadrature did not converge (estimated error {error:e}, requested {tol:e})")]
    Quadrature { error: f64, tol: f64 },

    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    #[error("drift envelope violated: Γ({r}) = {gamma} < {pairing} for a sampled pair")]
    DriftEnvelope { r: f64, gamma: f64, pairing: f64 },

    #[error("t_grid reaches {t} but censoring begins at {horizon}")]
    BeyondCensoring { t: f64, horizon: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("decay fell below the noise floor before the second grid point; increase n_paths")]
    NoiseFloor,

    #[error("config error in `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidArgument {
        name,
        reason: reason.into(),
    }
}
