//! Supervised classification harness: dataset ingestion, training modes, and
//! the qualitative analyses.

pub mod analysis;
pub mod dataset;
pub mod idx;
pub mod train;

pub use analysis::{
    confusion_failures, extreme_samples, predict_classes, spearman, write_pgm, ConfusionMatrix,
    ExtremeSample, ExtremeSamples, WeightTrace, WeightTracker,
};
pub use dataset::{make_synthetic, Dataset, Split, SyntheticKind};
pub use idx::{load_idx, load_mnist};
pub use train::{
    all_weights, per_sample_losses, test_accuracy, train_supervised, EpochRow, SupervisedConfig,
    SupervisedOutput,
};
