use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("non-finite value at index {0}")]
    NonFinite(usize),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error(
        "quadrature did not converge within {panels} panels \
         (partial value {partial:e}, last panel {last_panel:e})"
    )]
    QuadratureNonConvergence {
        panels: usize,
        partial: f64,
        last_panel: f64,
    },

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("potential has zero average on ball centered at {center:?} with radius {radius}")]
    ZeroBallAverage { center: Vec<f64>, radius: f64 },

    #[error("unbounded critical radius on scan range")]
    UnboundedCriticalRadius,

    #[error("critical radius below scan range at {0:?}")]
    CriticalRadiusBelowRange(Vec<f64>),

    #[error("operator of size {size} exceeds the dense cap {cap}")]
    SizeCap { size: usize, cap: usize },

    #[error("eigensolver failed: {0}")]
    Eigensolver(String),

    #[error("diagonal singularity: the time-integrated kernel diverges at x = y")]
    DiagonalSingularity,

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("unknown {kind} `{name}`")]
    UnknownName { kind: &'static str, name: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
