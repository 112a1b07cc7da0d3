use thiserror::Error;

/// Errors raised by the geometric engine.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum GeomError {
    #[error("point {point:?} lies outside the chart domain")]
    Domain { point: Vec<f64> },
    #[error("jet order {requested} requested but only {max} is supported")]
    Capability { requested: usize, max: usize },
    #[error("shape error: {0}")]
    Shape(String),
    #[error("variance error: {0}")]
    Variance(String),
    #[error("rank error: {0}")]
    Rank(String),
    #[error("degenerate metric at {point:?} (condition number {condition:e})")]
    Degenerate { point: Vec<f64>, condition: f64 },
    #[error("scale density vanishes at {point:?}")]
    ZeroScale { point: Vec<f64> },
    #[error("tractor objects live in different scales")]
    ScaleMismatch,
    #[error("scale is not adapted: divergences {divergences:?}")]
    NotAdapted { divergences: [f64; 3] },
    #[error("descent failure: {0}")]
    Descent(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("model self-check failed: {0}")]
    Model(String),
}

pub type Result<T> = std::result::Result<T, GeomError>;
