//! Desk-scale training harness for comparing the softmax and sparse-softmax
//! cross-entropy on synthetic many-class problems.

pub mod dataset;
pub mod error;
pub mod metrics;
pub mod model;
pub mod optim;
pub mod records;
pub mod snapshot;
pub mod sweep;
pub mod train;

pub use dataset::{generate_dataset, DatasetParams, Split, SyntheticDataset};
pub use error::{Result, TrainError};
pub use metrics::{evaluate, f1_scores, ConfusionMatrix, F1Scores};
pub use model::{Model, ModelConfig};
pub use optim::{Optimizer, OptimizerConfig};
pub use sweep::{sweep_k, RowStatus, SweepRow, SweepTable};
pub use train::{train, Divergence, ExperimentRecord, LossKind, TrainConfig, TrainOutcome};
