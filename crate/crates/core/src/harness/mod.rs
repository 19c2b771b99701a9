//! Datasets, configuration, experiment drivers and report emission.

pub mod accounting;
pub mod config;
pub mod experiment;
pub mod idx;
pub mod report;
pub mod split;
pub mod synthetic;
pub mod trainer;

pub use accounting::gradient_steps;
pub use config::{ExperimentConfig, Method, Mode};
pub use experiment::{run_experiment, run_on_workload, prepare_workload, TrialReport, TrialRow, Workload};
pub use idx::load_idx;
pub use report::{ema, write_report};
pub use split::{split, DatasetSplit, TestPartition};
pub use synthetic::{make_synthetic, SyntheticKind};
pub use trainer::SupervisedTrainer;
