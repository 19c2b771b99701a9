//! Experiment configuration.
//!
//! Configs are TOML files of `key = value` lines grouped under section
//! headers. Every mode has a preset; a config file only needs the keys it
//! changes and is merged over the preset for its mode. Unknown keys are
//! rejected.
//!
//! ```toml
//! [experiment]
//! mode = "benchmark"
//! seeds = [1, 2, 3, 4, 5]
//! methods = ["popdescent", "population-fixed", "random-search"]
//!
//! [popdescent]
//! population = 5
//! replaced = 2
//! iterations = 50
//! batches = 128
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::baselines::ScheduleSpace;
use crate::engine::FitnessSource;
use crate::error::{Error, Result};
use crate::harness::synthetic::SyntheticKind;
use crate::mutation::MutationConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Benchmark,
    Convergence,
    Ablation,
    Sensitivity,
    SampleDist,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Benchmark => "benchmark",
            Mode::Convergence => "convergence",
            Mode::Ablation => "ablation",
            Mode::Sensitivity => "sensitivity",
            Mode::SampleDist => "sample-dist",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// The full memetic loop.
    Popdescent,
    /// Same population and budget, no mutation: fixed hyper-parameters.
    PopulationFixed,
    RandomSearch,
    GridSearch,
    ScheduleSearch,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Popdescent => "popdescent",
            Method::PopulationFixed => "population-fixed",
            Method::RandomSearch => "random-search",
            Method::GridSearch => "grid-search",
            Method::ScheduleSearch => "schedule-search",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DataSource {
    /// IDX files when present in the data directory, synthetic otherwise.
    Auto,
    Idx,
    Synthetic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HyperInitKind {
    Fixed,
    Random,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OptimizerKind {
    Adam,
    Sgd,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepParameter {
    LearningRate,
    Iterations,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    Markdown,
    Svg,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub mode: Mode,
    pub seeds: Vec<u64>,
    pub methods: Vec<Method>,
    pub out_dir: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    pub source: DataSource,
    /// Directory holding `train-images-idx3-ubyte` / `train-labels-idx1-ubyte`.
    pub data_dir: Option<PathBuf>,
    pub kind: SyntheticKind,
    /// Synthetic example count.
    pub n: usize,
    pub noise: f64,
    /// Train / cross-validation / test fractions.
    pub fractions: (f64, f64, f64),
    pub max_train: Option<usize>,
    /// Tighter training cap used only with synthetic data.
    pub synthetic_max_train: Option<usize>,
    /// Seed for dataset generation and splitting, shared by all trials.
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    /// Hidden widths for synthetic data.
    pub hidden: Vec<usize>,
    /// Hidden widths for IDX data.
    pub idx_hidden: Vec<usize>,
    /// Weight layers carrying an L2 penalty.
    pub regularized: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PopdescentSection {
    pub population: usize,
    /// Members replaced per iteration (`|P| − m`).
    pub replaced: usize,
    pub iterations: usize,
    pub batches: usize,
    pub epochs_per_iteration: usize,
    pub batch_size: usize,
    pub cv_batch_size: usize,
    pub learning_rate: f64,
    pub regularization_rate: f64,
    pub init: HyperInitKind,
    pub optimizer: OptimizerKind,
    pub fitness: FitnessSource,
}

impl PopdescentSection {
    pub fn elite(&self) -> usize {
        self.population.saturating_sub(self.replaced)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomSearchSection {
    pub trials: usize,
    pub probe_epochs: usize,
    pub patience: usize,
    pub lr_range: (f64, f64),
    pub reg_range: (f64, f64),
    /// Total steps including probes; defaults to the PopDescent budget.
    pub budget: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSearchSection {
    pub learning_rates: Vec<f64>,
    pub regularization_rates: Vec<f64>,
    /// Defaults to the PopDescent budget divided by the population size.
    pub budget_per_model: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSearchSection {
    pub trials: usize,
    pub probe_epochs: usize,
    pub patience: usize,
    pub budget: Option<u64>,
    pub space: ScheduleSpace,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensitivitySection {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleDistSection {
    pub draws: usize,
    pub sigma: f64,
    pub base: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportSection {
    /// EMA smoothing constant for plotted traces.
    pub ema: f64,
    pub formats: Vec<ReportFormat>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentSection,
    pub data: DataSection,
    pub model: ModelSection,
    pub popdescent: PopdescentSection,
    pub mutation: MutationConfig,
    pub random_search: RandomSearchSection,
    pub grid_search: GridSearchSection,
    pub schedule_search: ScheduleSearchSection,
    pub sensitivity: SensitivitySection,
    pub sample_dist: SampleDistSection,
    pub report: ReportSection,
}

impl ExperimentConfig {
    /// Desk-scale defaults for `mode`.
    pub fn preset(mode: Mode) -> Self {
        let grid = vec![0.01, 0.001, 0.0001, 0.00001, 0.000001];
        let mut cfg = ExperimentConfig {
            experiment: ExperimentSection {
                mode,
                seeds: vec![1, 2, 3, 4, 5],
                methods: vec![
                    Method::Popdescent,
                    Method::PopulationFixed,
                    Method::RandomSearch,
                    Method::ScheduleSearch,
                    Method::GridSearch,
                ],
                out_dir: PathBuf::from("out").join(mode.name()),
            },
            data: DataSection {
                source: DataSource::Auto,
                data_dir: None,
                kind: SyntheticKind::TwoMoons,
                n: 20_000,
                noise: 0.25,
                fractions: (0.5, 0.25, 0.25),
                max_train: Some(10_000),
                synthetic_max_train: None,
                seed: 2024,
            },
            model: ModelSection {
                hidden: vec![32],
                idx_hidden: vec![128],
                regularized: vec![0],
            },
            popdescent: PopdescentSection {
                population: 5,
                replaced: 2,
                iterations: 50,
                batches: 128,
                epochs_per_iteration: 1,
                batch_size: 64,
                cv_batch_size: 64,
                learning_rate: 0.001,
                regularization_rate: 0.001,
                init: HyperInitKind::Fixed,
                optimizer: OptimizerKind::Adam,
                fitness: FitnessSource::CrossValidation,
            },
            mutation: MutationConfig::default(),
            random_search: RandomSearchSection {
                trials: 25,
                probe_epochs: 2,
                patience: 2,
                lr_range: (1e-4, 1e-2),
                reg_range: (1e-5, 1e-1),
                budget: None,
            },
            grid_search: GridSearchSection {
                learning_rates: grid.clone(),
                regularization_rates: grid,
                budget_per_model: None,
            },
            schedule_search: ScheduleSearchSection {
                trials: 25,
                probe_epochs: 2,
                patience: 0,
                budget: None,
                space: ScheduleSpace::default(),
            },
            sensitivity: SensitivitySection {
                parameter: SweepParameter::LearningRate,
                values: vec![0.01, 0.05, 0.001],
            },
            sample_dist: SampleDistSection {
                draws: 1_000_000,
                sigma: 1.0,
                base: 10.0,
            },
            report: ReportSection {
                ema: 0.1,
                formats: vec![ReportFormat::Csv, ReportFormat::Markdown, ReportFormat::Svg],
            },
        };
        match mode {
            Mode::Benchmark | Mode::SampleDist => {}
            Mode::Convergence => {
                cfg.popdescent.iterations = 115;
                cfg.experiment.seeds = (1..=6).collect();
            }
            Mode::Ablation => {
                cfg.popdescent.population = 10;
                cfg.popdescent.replaced = 5;
                cfg.popdescent.iterations = 35;
                // Synthetic stand-in for an overfitting-capable model: few,
                // noisy training points and a wider, deeper network.
                cfg.data.synthetic_max_train = Some(500);
                cfg.data.noise = 0.4;
                cfg.model.hidden = vec![64, 64];
                cfg.experiment.methods = vec![Method::Popdescent];
            }
            Mode::Sensitivity => {
                cfg.popdescent.population = 10;
                cfg.popdescent.replaced = 5;
                cfg.popdescent.iterations = 30;
                cfg.experiment.methods = vec![Method::Popdescent, Method::PopulationFixed];
            }
        }
        cfg
    }

    /// Parses a config file's text, merged over the preset of the mode it
    /// names (or `default_mode` when it names none).
    pub fn from_toml_str(text: &str, default_mode: Mode) -> Result<Self> {
        let overrides: toml::Table = text.parse().map_err(|e| Error::Config(format!("{e}")))?;
        let mode = match overrides.get("experiment").and_then(|e| e.get("mode")) {
            Some(v) => Mode::deserialize(v.clone()).map_err(|e| Error::Config(format!("experiment.mode: {e}")))?,
            None => default_mode,
        };
        let preset = toml::Table::try_from(Self::preset(mode)).map_err(|e| Error::Config(format!("{e}")))?;
        let merged = merge(preset, overrides);
        let cfg: Self = merged.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>, default_mode: Mode) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())?;
        Self::from_toml_str(&text, default_mode)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let cfg_err = |m: String| Err(Error::Config(m));
        let seeds = &self.experiment.seeds;
        if seeds.is_empty() {
            return cfg_err("experiment.seeds must not be empty".into());
        }
        let mut sorted = seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != seeds.len() {
            return cfg_err("experiment.seeds must be distinct".into());
        }
        if self.experiment.mode != Mode::SampleDist && self.experiment.methods.is_empty() {
            return cfg_err("experiment.methods must not be empty".into());
        }
        let pd = &self.popdescent;
        if pd.replaced == 0 || pd.replaced >= pd.population {
            return cfg_err(format!(
                "popdescent.replaced = {} must satisfy 1 <= replaced < population = {} (so that 1 <= m < population)",
                pd.replaced, pd.population
            ));
        }
        if pd.iterations == 0 || pd.batches == 0 || pd.epochs_per_iteration == 0 {
            return cfg_err("popdescent iterations, batches and epochs_per_iteration must be >= 1".into());
        }
        if pd.batch_size == 0 || pd.cv_batch_size == 0 {
            return cfg_err("batch sizes must be >= 1".into());
        }
        if !(pd.learning_rate > 0.0 && pd.regularization_rate > 0.0) {
            return cfg_err("popdescent learning and regularization rates must be positive".into());
        }
        self.mutation.validate().map_err(|e| Error::Config(e.to_string()))?;
        if self.random_search.trials == 0 || self.schedule_search.trials == 0 {
            return cfg_err("search trials must be >= 1".into());
        }
        if !(0.0 < self.report.ema && self.report.ema <= 1.0) {
            return cfg_err(format!("report.ema = {} must be in (0, 1]", self.report.ema));
        }
        if self.experiment.mode == Mode::Sensitivity {
            if self.sensitivity.values.is_empty() {
                return cfg_err("sensitivity.values must not be empty".into());
            }
            if self.sensitivity.values.iter().any(|v| !(*v > 0.0)) {
                return cfg_err("sensitivity.values must be positive".into());
            }
            if self.sensitivity.parameter == SweepParameter::Iterations
                && self.sensitivity.values.iter().any(|v| v.fract() != 0.0)
            {
                return cfg_err("iteration sweep values must be whole numbers".into());
            }
        }
        if self.data.n < 4 {
            return cfg_err("data.n must be >= 4".into());
        }
        Ok(())
    }
}

/// Recursively overlays `overrides` onto `base`.
fn merge(mut base: toml::Table, overrides: toml::Table) -> toml::Table {
    for (key, value) in overrides {
        match (base.remove(&key), value) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => {
                base.insert(key, toml::Value::Table(merge(b, o)));
            }
            (_, v) => {
                base.insert(key, v);
            }
        }
    }
    base
}
