use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("input is not a unit vector (|q| = {norm})")]
    NonUnitInput { norm: f64 },

    #[error("vector is not tangent at the base point (<q, v> = {dot})")]
    NonTangentInput { dot: f64 },

    #[error("curve has {nodes} nodes, at least {min} required")]
    TooCoarse { nodes: usize, min: usize },

    #[error("unsupported derivative order {0}")]
    UnsupportedOrder(usize),

    #[error("degenerate curve: {reason} at node {node}")]
    DegenerateCurve { node: usize, reason: &'static str },

    #[error("curve is not embedded: segments {first} and {second} intersect")]
    NotEmbedded { first: usize, second: usize },

    #[error("step failed at t = {t}: {halvings} step-size halvings exhausted ({reason})")]
    StepFailure { t: f64, halvings: usize, reason: String },

    #[error("lift seed is off the fiber over the first node (distance {distance})")]
    SeedOffFiber { distance: f64 },

    #[error("degenerate surface metric at grid point ({row}, {col})")]
    DegenerateMetric { row: usize, col: usize },

    #[error("mesh does not match curve: {0}")]
    MeshCurveMismatch(String),

    #[error("samples {first} and {second} are separated by a resampling event")]
    ResampledBetweenSamples { first: usize, second: usize },

    #[error("energy {energy} is outside the regime E < 8")]
    RegimeViolation { energy: f64 },

    #[error("trajectory too short: {got} samples, {need} required")]
    TrajectoryTooShort { got: usize, need: usize },

    #[error("config error for key `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }
}
