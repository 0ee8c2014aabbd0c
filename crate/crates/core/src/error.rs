use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("end effector lies within {threshold} m of anchor {anchor:?}")]
    DegenerateGeometry { anchor: String, threshold: f64 },

    #[error("invalid layout: {0}")]
    InvalidLayout(String),

    #[error("invalid tension bounds: t_min={t_min}, t_max={t_max}")]
    InvalidBounds { t_min: f64, t_max: f64 },

    #[error("invalid solver config: {0}")]
    InvalidSolverConfig(String),

    #[error("tension vector has length {got}, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid tension {0} N")]
    InvalidTension(f64),

    #[error("invalid actuator parameters: {0}")]
    InvalidActuatorParams(String),

    #[error("invalid material: {0}")]
    InvalidMaterial(String),

    #[error("zero-length vector")]
    ZeroVector,

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("invalid protocol: {0}")]
    InvalidProtocol(String),

    #[error("invalid plant model: {0}")]
    InvalidPlant(String),
}

pub type Result<T> = std::result::Result<T, Error>;
