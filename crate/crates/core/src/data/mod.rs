//! Synthetic datasets paired with the handcrafted models, and the
//! ablation-based ground-truth attributions that come with them.

mod generate;
mod truth;

pub use generate::{generate_dataset, DatasetBundle, DatasetSpec, GeneratedDataset, Split};
pub use truth::{boolean_reference, ground_truth_boolean_unit, ground_truth_exact, GroundTruth};

use crate::error::Result;
use crate::nn::{train_mlp, FeedForwardNet, TrainConfig, TrainReport};

/// Trains a comparison model on a bundle's features and labels.
pub fn train_on_bundles(
    train: &DatasetBundle,
    val: &DatasetBundle,
    cfg: &TrainConfig,
) -> Result<(FeedForwardNet, TrainReport)> {
    train_mlp(&train.features, &train.labels, &val.features, &val.labels, cfg)
}
