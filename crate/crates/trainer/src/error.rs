use sparse_softmax::CoreError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("model produces {model} logits but the dataset has {data} classes")]
    ClassCountMismatch { model: usize, data: usize },
    #[error("model expects {model} features but the dataset has {data}")]
    FeatureDimMismatch { model: usize, data: usize },
    #[error("cannot evaluate on an empty split")]
    EmptySplit,
    #[error("label {label} out of range for {n_classes} classes")]
    LabelOutOfRange { label: usize, n_classes: usize },
    #[error("malformed dataset snapshot, line {line}: {reason}")]
    Snapshot { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = TrainError> = std::result::Result<T, E>;
