//! Population Descent: a memetic hyper-parameter tuner.
//!
//! Every iteration runs a gradient-based local update on each member of a
//! fixed-size population, scores the members on a held-out cross-validation
//! batch, keeps the `m` fittest untouched and replaces the rest with mutated
//! copies drawn in proportion to fitness. Poorly performing replacements are
//! mutated harder, which lets the population adapt learning and
//! regularization rates while it trains.
//!
//! The crate is organised as:
//!
//! * [`engine`]: the population loop, fitness, selection and replacement.
//! * [`localsearch`]: models, losses, SGD/Adam and a finite-difference oracle.
//! * [`mutation`]: fitness-scaled Gaussian/log-domain mutation.
//! * [`baselines`]: grid search, random search, learning-rate schedules.
//! * [`harness`]: datasets, configuration, experiments and reports.

pub mod baselines;
pub mod data;
pub mod engine;
pub mod error;
pub mod harness;
pub mod individual;
pub mod localsearch;
pub mod mutation;
pub mod rng;

pub use data::{Batch, BatchSource, Dataset, FixedBatch, SampledStream};
pub use engine::{
    build_fitness_distribution, fitness_from_loss, popdescent_iteration, replace_weakest, run,
    Convergence, EngineConfig, FitnessSource, FitnessValue, HyperInit, IterationTrace, Population,
    RunOutcome,
};
pub use error::{Error, Result};
pub use individual::{Hyperparams, Individual, LEARNING_RATE, REGULARIZATION_RATE};
pub use localsearch::{
    AdamConfig, AdamState, LocalOptimizer, LossReport, MlpSpec, Model, OptState,
};
pub use mutation::MutationConfig;
