//! Supervised training: gradients, optimizer, input standardization, splits
//! and the epoch loop.

pub mod adamw;
pub mod grad;
pub mod split;
pub mod standardizer;
pub mod train;

pub use adamw::{AdamW, AdamWConfig};
pub use grad::{backward, batch_mae, mae_loss};
pub use split::{split_dataset, Split};
pub use standardizer::Standardizer;
pub use train::{mean_loss, predict, train, EpochRecord, Example, Loss, TrainConfig, TrainOutcome};
