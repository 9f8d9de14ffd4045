use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("parameter out of range: {name} = {value} ({constraint})")]
    Parameter {
        name: &'static str,
        value: f64,
        constraint: &'static str,
    },

    #[error("field shape mismatch: expected {expected} samples, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("singular evaluation at node {node}: {what}")]
    Singular { node: usize, what: &'static str },

    #[error("metric degenerate at node {node}: density {value:e}")]
    MetricDegenerate { node: usize, value: f64 },

    #[error("k = {k:e} too large: reference density minimum {min:e} below {floor:e}")]
    KTooLarge { k: f64, min: f64, floor: f64 },

    #[error("initial potential not admissible: min(1 + Δφ) = {min:e} at node {node}")]
    Inadmissible { node: usize, min: f64 },

    #[error("time step failed at t = {t}: {reason}")]
    StepFailure { t: f64, reason: String },

    #[error("newton did not converge at ε = {epsilon}: residual {residual:e} after {iterations} iterations")]
    NoConvergence {
        epsilon: f64,
        residual: f64,
        iterations: usize,
    },

    #[error("linear solver stalled: relative residual {residual:e} after {iterations} iterations")]
    LinearSolve { residual: f64, iterations: usize },

    #[error("smoothing failed: {0}")]
    Smoothing(String),

    #[error("{0}")]
    Undefined(String),

    #[error("runs cannot be compared: {0}")]
    Comparison(String),

    #[error("i/o error at {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}
