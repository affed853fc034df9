//! Adam, the epoch loop, evaluation metrics and checkpoints.

mod adam;
mod checkpoint;
mod evaluate;
mod metrics;
mod train;

pub use adam::{clip_grad_norm, AdamConfig, AdamState};
pub use checkpoint::{Checkpoint, CHECKPOINT_FORMAT, CHECKPOINT_VERSION};
pub use evaluate::evaluate;
pub use metrics::{history_csv, BranchMetrics, ConfusionMatrix, EpochRecord, Metrics, HISTORY_HEADER};
pub use train::{sample_gradients, train, TrainConfig, TrainOutcome};
