use thiserror::Error;

/// Errors raised by every module of the laboratory.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("hypothesis (H) clause `{clause}` violated at {points:?}")]
    Hypothesis { clause: String, points: Vec<f64> },
    #[error("quadrature failure: {0}")]
    Quadrature(String),
    #[error("empty region: {0}")]
    EmptyRegion(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("diffeomorphism: {0}")]
    Diffeo(String),
    #[error("level set: {0}")]
    LevelSet(String),
    #[error("density undefined at facet {facet} (centroid {point:?})")]
    DensityUndefined { facet: usize, point: [f64; 3] },
    #[error("radius guard: ball radius {radius} must be below r_max = {r_max}")]
    RadiusGuard { radius: f64, r_max: f64 },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("manifest key `{key}`: {msg}")]
    Manifest { key: String, msg: String },
    #[error("schema mismatch: {0}")]
    Schema(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
