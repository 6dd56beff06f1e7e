use thiserror::Error;

pub type Result<T> = std::result::Result<T, ScodError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScodError {
    #[error("invalid configuration: {0}")]
    InvalidConfiguration(String),

    #[error("invalid cost: {0}")]
    InvalidCost(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("{0} must not be empty")]
    EmptyInput(&'static str),

    #[error("label {label} out of range for {num_classes} classes")]
    LabelOutOfRange { label: usize, num_classes: usize },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("training diverged at epoch {epoch} (loss = {loss})")]
    TrainingDiverged { epoch: usize, loss: f64 },

    #[error("subspace fit needs rank {requested}, data has rank {achieved}")]
    RankDeficient { requested: usize, achieved: usize },

    #[error("parse error: {0}")]
    Parse(String),
}
