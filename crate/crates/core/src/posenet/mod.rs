//! Labelled datasets, the convolutional pose regressor, its training loop and
//! evaluation.

mod config;
pub mod dataset;
mod eval;
mod gradcheck;
mod labels;
mod linalg;
mod model;
mod network;
mod train;

pub use config::{Activation, NetworkConfig, Optimizer};
pub use dataset::{
    collect_dataset, read_dataset, read_manifest, split_indices, synthesize_sample, write_dataset, CollectOptions,
    LabelledSample, ManifestRecord, Split, MANIFEST_FILE, SPLIT_FILE,
};
pub use eval::{evaluate, evaluate_predictions, EvalReport};
pub use gradcheck::{gradient_check, gradient_check_config, FD_STEP};
pub use labels::{LabelScaler, PoseEstimate, COMPONENT_NAMES, COMPONENT_UNITS};
pub use model::{network_input, PoseNet};
pub use network::OUTPUTS;
pub use train::{dataset_loss, train, train_with_progress, EpochRecord, TrainingLog};
