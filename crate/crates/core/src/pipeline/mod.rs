//! Splitting, feature tables, training, evaluation, sweeps and persistence.

pub mod bundle;
pub mod confusion;
pub mod dataset;
pub mod features;
pub mod model;
pub mod split;
pub mod standardize;
pub mod sweep;
pub mod synthetic;

pub use bundle::{load_bundle, save_bundle};
pub use confusion::ConfusionMatrix;
pub use dataset::{load_dataset, LoadedDataset};
pub use features::{extract_features, FeatureRow, FeatureSetSpec, FeatureTable};
pub use model::{evaluate, train_all, ClassifierKind, digest, Evaluation, ModelBundle, TrainConfig};
pub use split::{split, Split};
pub use standardize::{DimStats, Standardizer};
pub use sweep::{run_experiment, sweep, SweepParameter, SweepResult};
pub use synthetic::SyntheticBenchmark;
