//! Experiment drivers: one row per (method variant, seed), each with its
//! own seed hierarchy, joined into a [`TrialReport`].

use std::path::Path;

use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::baselines::{grid_search, random_search, schedule_search, SearchOutcome, SearchSpace, TrainPlan, Trainer};
use crate::data::{Dataset, SampledStream};
use crate::engine::{run, Convergence, EngineConfig, FitnessSource, HyperInit, Population};
use crate::error::{Error, Result};
use crate::harness::accounting::{gradient_steps, grid_search_steps, random_search_steps};
use crate::harness::config::{
    DataSource, ExperimentConfig, HyperInitKind, Method, Mode, OptimizerKind, PopdescentSection, SweepParameter,
};
use crate::harness::idx::load_idx;
use crate::harness::split::{split, DatasetSplit};
use crate::harness::synthetic::make_synthetic;
use crate::harness::trainer::SupervisedTrainer;
use crate::individual::Hyperparams;
use crate::localsearch::{AdamConfig, LocalOptimizer, MlpSpec};
use crate::mutation::{init_hyperparams, log_symmetry_check};
use crate::rng::{derive_seed, substream, tag};

pub const TRAIN_IMAGES: &str = "train-images-idx3-ubyte";
pub const TRAIN_LABELS: &str = "train-labels-idx1-ubyte";

/// Data partitions plus the base architecture for them.
#[derive(Debug)]
pub struct Workload {
    pub split: DatasetSplit,
    pub model: MlpSpec,
    pub description: String,
}

fn idx_available(dir: &Path) -> bool {
    dir.join(TRAIN_IMAGES).is_file() && dir.join(TRAIN_LABELS).is_file()
}

/// Loads IDX data when configured (or found, in `auto` mode) and falls back
/// to the synthetic generator otherwise.
pub fn prepare_workload(cfg: &ExperimentConfig) -> Result<Workload> {
    let data = &cfg.data;
    let idx_dir = data.data_dir.as_deref().filter(|d| idx_available(d));
    let use_idx = match data.source {
        DataSource::Idx => {
            let dir = data.data_dir.as_deref().ok_or_else(|| Error::Config("data.source = \"idx\" needs a data directory".into()))?;
            if !idx_available(dir) {
                return Err(Error::Config(format!("no {TRAIN_IMAGES}/{TRAIN_LABELS} in {}", dir.display())));
            }
            true
        }
        DataSource::Auto => idx_dir.is_some(),
        DataSource::Synthetic => false,
    };
    let (dataset, hidden, description) = if use_idx {
        let dir = data.data_dir.as_deref().expect("checked above");
        let set = load_idx(dir.join(TRAIN_IMAGES), dir.join(TRAIN_LABELS))?;
        let desc = format!("IDX {} ({} examples)", dir.display(), set.len());
        (set, cfg.model.idx_hidden.clone(), desc)
    } else {
        let set = make_synthetic(data.kind, data.n, data.noise, &mut substream(data.seed, &[tag::DATA]))?;
        let desc = format!("synthetic {:?} (n = {}, noise = {})", data.kind, data.n, data.noise);
        (set, cfg.model.hidden.clone(), desc)
    };
    let mut parts = split(&dataset, data.fractions, &mut substream(data.seed, &[tag::SPLIT]))?;
    let cap = if use_idx {
        data.max_train
    } else {
        data.synthetic_max_train.or(data.max_train)
    };
    if let Some(max) = cap {
        parts = parts.cap_train(max);
    }
    let mut widths = vec![dataset.features()];
    widths.extend(hidden);
    widths.push(dataset.classes());
    let model = MlpSpec::relu(widths, [])?;
    let description = format!(
        "{description}; train/cv/test = {}/{}/{}; network {:?}",
        parts.train.len(),
        parts.cv.len(),
        parts.test.len(),
        model.widths()
    );
    Ok(Workload {
        split: parts,
        model,
        description,
    })
}

/// One method variant to run for every seed.
#[derive(Clone, Debug, PartialEq)]
pub struct RunSpec {
    pub label: String,
    pub method: Method,
    pub popdescent: PopdescentSection,
    pub mutation_enabled: bool,
    pub regularized: Vec<usize>,
}

/// Expands the configured mode into the list of variants to run.
pub fn plan_runs(cfg: &ExperimentConfig, layers: usize) -> Vec<RunSpec> {
    let base = |method: Method| RunSpec {
        label: method.name().to_string(),
        method,
        popdescent: cfg.popdescent.clone(),
        mutation_enabled: method != Method::PopulationFixed,
        regularized: cfg.model.regularized.iter().copied().filter(|&l| l < layers).collect(),
    };
    match cfg.experiment.mode {
        Mode::Benchmark | Mode::Convergence => cfg.experiment.methods.iter().map(|&m| base(m)).collect(),
        Mode::Ablation => {
            let every_layer: Vec<usize> = (0..layers).collect();
            let variant = |label: &str, mutation: bool, fitness: FitnessSource, reg: &[usize]| {
                let mut spec = base(Method::Popdescent);
                spec.label = label.to_string();
                spec.mutation_enabled = mutation;
                spec.popdescent.fitness = fitness;
                spec.regularized = reg.to_vec();
                spec
            };
            vec![
                variant("randomization-on/cv/reg", true, FitnessSource::CrossValidation, &every_layer),
                variant("randomization-off/cv/reg", false, FitnessSource::CrossValidation, &every_layer),
                variant("cv-selection/no-reg", true, FitnessSource::CrossValidation, &[]),
                variant("train-selection/no-reg", true, FitnessSource::Training, &[]),
            ]
        }
        Mode::Sensitivity => {
            let mut specs = Vec::new();
            for &method in &cfg.experiment.methods {
                for &value in &cfg.sensitivity.values {
                    let mut spec = base(method);
                    match cfg.sensitivity.parameter {
                        SweepParameter::LearningRate => {
                            spec.popdescent.learning_rate = value;
                            spec.label = format!("{} lr={value}", method.name());
                        }
                        SweepParameter::Iterations => {
                            spec.popdescent.iterations = value as usize;
                            spec.label = format!("{} iterations={value}", method.name());
                        }
                    }
                    specs.push(spec);
                }
            }
            specs
        }
        Mode::SampleDist => Vec::new(),
    }
}

/// Outcome of one (variant, seed) run.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialRow {
    pub seed: u64,
    pub method: String,
    /// Mean cross-entropy on the test partition.
    pub test_loss: Option<f64>,
    /// Mean cross-entropy on the whole training partition.
    pub train_loss: Option<f64>,
    pub test_accuracy: Option<f64>,
    /// CV loss (with penalty) of the returned model on the whole CV partition.
    pub cv_loss: Option<f64>,
    pub gradient_steps: u64,
    /// What the step accountant's formula says the method should use.
    pub expected_steps: u64,
    pub learning_rate: Option<f64>,
    pub regularization_rate: Option<f64>,
    /// `(cumulative gradient steps, cv loss)`
    pub trace: Vec<(u64, f64)>,
    pub error: Option<String>,
}

impl TrialRow {
    pub fn ok(&self) -> bool {
        self.error.is_none()
    }
}

/// Summary of the mutation and initialization samplers.
#[derive(Clone, Debug, PartialEq)]
pub struct DistributionReport {
    pub sigma: f64,
    pub base: f64,
    pub draws: usize,
    pub p_low: f64,
    pub p_high: f64,
    /// `Φ(−1/σ)`, the exact tail probability under the log-Gaussian model.
    pub expected_tail: f64,
    pub base2_p_low: f64,
    pub base2_p_high: f64,
    pub init_draws: usize,
    pub init_lr_log10_median: f64,
    pub init_lr_log10_sd: f64,
    pub init_reg_log10_median: f64,
    pub init_reg_log10_sd: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Stats {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation (0 for a single value).
    pub sd: f64,
    pub median: f64,
}

pub fn stats(values: &[f64]) -> Option<Stats> {
    if values.is_empty() {
        return None;
    }
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let sd = if n > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    Some(Stats {
        n,
        mean,
        sd,
        median: median(values),
    })
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MethodSummary {
    pub method: String,
    pub runs: usize,
    pub failures: usize,
    pub test: Option<Stats>,
    pub train: Option<Stats>,
    pub gradient_steps: Option<Stats>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialReport {
    pub mode: Mode,
    pub data: String,
    pub rows: Vec<TrialRow>,
    /// `(method, seed, test evaluations)` for every pair that touched the
    /// test partition.
    pub test_accesses: Vec<(String, u64, usize)>,
    pub distribution: Option<DistributionReport>,
}

impl TrialReport {
    /// Method labels in first-appearance order.
    pub fn methods(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.method) {
                out.push(r.method.clone());
            }
        }
        out
    }

    pub fn rows_for<'a>(&'a self, method: &'a str) -> impl Iterator<Item = &'a TrialRow> + 'a {
        self.rows.iter().filter(move |r| r.method == method)
    }

    pub fn test_losses(&self, method: &str) -> Vec<f64> {
        self.rows_for(method).filter_map(|r| r.test_loss).collect()
    }

    pub fn train_losses(&self, method: &str) -> Vec<f64> {
        self.rows_for(method).filter_map(|r| r.train_loss).collect()
    }

    pub fn summary(&self) -> Vec<MethodSummary> {
        self.methods()
            .into_iter()
            .map(|m| {
                let rows: Vec<&TrialRow> = self.rows_for(&m).collect();
                let steps: Vec<f64> = rows.iter().filter(|r| r.ok()).map(|r| r.gradient_steps as f64).collect();
                MethodSummary {
                    runs: rows.len(),
                    failures: rows.iter().filter(|r| !r.ok()).count(),
                    test: stats(&self.test_losses(&m)),
                    train: stats(&self.train_losses(&m)),
                    gradient_steps: stats(&steps),
                    method: m,
                }
            })
            .collect()
    }
}

fn optimizer(kind: OptimizerKind) -> LocalOptimizer {
    match kind {
        OptimizerKind::Adam => LocalOptimizer::Adam(AdamConfig::default()),
        OptimizerKind::Sgd => LocalOptimizer::Sgd,
    }
}

/// A trained model before final evaluation.
struct Fitted {
    theta: Vec<f64>,
    hyperparams: Hyperparams,
    gradient_steps: u64,
    expected_steps: u64,
    trace: Vec<(u64, f64)>,
}

fn popdescent_budget(pd: &PopdescentSection) -> Result<u64> {
    gradient_steps(
        pd.iterations as u64,
        pd.population as u64,
        pd.batches as u64,
        pd.epochs_per_iteration as u64,
    )
}

fn fit_popdescent(cfg: &ExperimentConfig, spec: &RunSpec, model: &MlpSpec, data: &DatasetSplit, seed: u64) -> Result<Fitted> {
    let pd = &spec.popdescent;
    let opt = optimizer(pd.optimizer);
    let init = match pd.init {
        HyperInitKind::Fixed => HyperInit::Fixed(Hyperparams::new(pd.learning_rate, pd.regularization_rate)?),
        HyperInitKind::Random => HyperInit::Random(cfg.mutation),
    };
    let population = Population::initialize(model, pd.population, pd.elite(), &init, &opt, seed)?;
    let train = SampledStream::new(&data.train, pd.batch_size);
    let cv = SampledStream::new(&data.cv, pd.cv_batch_size);
    let engine = EngineConfig {
        optimizer: opt,
        batches_per_iteration: pd.batches,
        epochs_per_iteration: pd.epochs_per_iteration,
        mutation: cfg.mutation,
        mutation_enabled: spec.mutation_enabled,
        replacement_enabled: true,
        fitness_source: pd.fitness,
    };
    let stop = Convergence::FixedIterations(pd.iterations);
    let out = run(population, |p, n| stop.is_converged(p, n), model, &train, &cv, &engine, seed)?;
    let mut cumulative = 0;
    let trace = out
        .traces
        .iter()
        .map(|t| {
            cumulative += t.gradient_steps;
            (cumulative, t.best_loss)
        })
        .collect();
    Ok(Fitted {
        theta: out.best.theta,
        hyperparams: out.best.alpha,
        gradient_steps: out.gradient_steps,
        expected_steps: popdescent_budget(pd)?,
        trace,
    })
}

fn from_search(out: SearchOutcome, expected_steps: u64) -> Fitted {
    let probe_steps = out.gradient_steps - out.model.gradient_steps;
    Fitted {
        trace: out.model.trace.iter().map(|&(s, l)| (s + probe_steps, l)).collect(),
        theta: out.model.theta,
        hyperparams: out.model.hyperparams,
        gradient_steps: out.gradient_steps,
        expected_steps,
    }
}

fn fit_search(cfg: &ExperimentConfig, spec: &RunSpec, model: &MlpSpec, data: &DatasetSplit, seed: u64) -> Result<Fitted> {
    let pd = &spec.popdescent;
    let trainer = SupervisedTrainer::new(
        model,
        &data.train,
        &data.cv,
        optimizer(pd.optimizer),
        pd.batch_size,
        pd.batches as u64,
    )?;
    let spe = trainer.steps_per_epoch();
    let budget = popdescent_budget(pd)?;
    let full_plan = |trials: usize, probe_epochs: usize, patience: usize, total: Option<u64>| -> Result<TrainPlan> {
        let total = total.unwrap_or(budget);
        let probes = (trials * probe_epochs) as u64 * spe;
        if probes + spe > total {
            return Err(Error::Config(format!(
                "search budget {total} cannot cover {probes} probe steps plus one full epoch of {spe} steps"
            )));
        }
        Ok(TrainPlan::Epochs {
            max_epochs: ((total - probes) / spe) as usize,
            patience: Some(patience),
        })
    };
    match spec.method {
        Method::GridSearch => {
            let g = &cfg.grid_search;
            let space = SearchSpace::grid(g.learning_rates.clone(), g.regularization_rates.clone())?;
            let per_model = g.budget_per_model.unwrap_or(budget / pd.population as u64);
            let points = space.cartesian()?.len() as u64;
            let out = grid_search(&space, &trainer, per_model, seed)?;
            Ok(from_search(out, grid_search_steps(points, per_model)?))
        }
        Method::RandomSearch => {
            let r = &cfg.random_search;
            let space = SearchSpace::log_ranges(r.lr_range, r.reg_range)?;
            let plan = full_plan(r.trials, r.probe_epochs, r.patience, r.budget)?;
            let out = random_search(&space, r.trials, r.probe_epochs, plan, &trainer, seed)?;
            let full_epochs = out.model.cv_history.len() as u64;
            let expected = random_search_steps(r.trials as u64, r.probe_epochs as u64, full_epochs, spe);
            Ok(from_search(out, expected))
        }
        Method::ScheduleSearch => {
            let s = &cfg.schedule_search;
            let plan = full_plan(s.trials, s.probe_epochs, s.patience, s.budget)?;
            let out = schedule_search(&s.space, s.trials, s.probe_epochs, plan, &trainer, seed)?;
            let full_epochs = out.model.cv_history.len() as u64;
            let expected = random_search_steps(s.trials as u64, s.probe_epochs as u64, full_epochs, spe);
            Ok(from_search(out, expected))
        }
        Method::Popdescent | Method::PopulationFixed => unreachable!("population methods use fit_popdescent"),
    }
}

/// Fits one variant for one seed, then evaluates it once on test data.
pub fn run_trial(cfg: &ExperimentConfig, workload: &Workload, spec: &RunSpec, seed: u64) -> TrialRow {
    let mut row = TrialRow {
        seed,
        method: spec.label.clone(),
        test_loss: None,
        train_loss: None,
        test_accuracy: None,
        cv_loss: None,
        gradient_steps: 0,
        expected_steps: 0,
        learning_rate: None,
        regularization_rate: None,
        trace: Vec::new(),
        error: None,
    };
    let result = (|| -> Result<()> {
        let model = workload.model.with_regularized(spec.regularized.iter().copied())?;
        let trial_seed = derive_seed(seed, &[tag::TRIAL]);
        let fitted = match spec.method {
            Method::Popdescent | Method::PopulationFixed => fit_popdescent(cfg, spec, &model, &workload.split, trial_seed)?,
            _ => fit_search(cfg, spec, &model, &workload.split, trial_seed)?,
        };
        row.gradient_steps = fitted.gradient_steps;
        row.expected_steps = fitted.expected_steps;
        row.learning_rate = Some(fitted.hyperparams.learning_rate());
        row.regularization_rate = Some(fitted.hyperparams.regularization_rate());
        row.trace = fitted.trace;
        if fitted.gradient_steps != fitted.expected_steps {
            return Err(Error::domain(format!(
                "step accounting mismatch: used {} steps, accountant expects {}",
                fitted.gradient_steps, fitted.expected_steps
            )));
        }
        let reg = fitted.hyperparams.regularization_rate();
        row.cv_loss = Some(model.loss(&fitted.theta, &workload.split.cv.as_batch()?, reg)?.total);
        row.train_loss = Some(model.loss(&fitted.theta, &workload.split.train.as_batch()?, reg)?.data_loss);
        let (test_loss, accuracy) = workload.split.test.evaluate(&spec.label, seed, |test: &Dataset| {
            let batch = test.as_batch()?;
            Ok((model.loss(&fitted.theta, &batch, reg)?.data_loss, model.accuracy(&fitted.theta, &batch)?))
        })?;
        row.test_loss = Some(test_loss);
        row.test_accuracy = Some(accuracy);
        Ok(())
    })();
    if let Err(e) = result {
        log::warn!("{} seed {seed}: {e}", spec.label);
        row.error = Some(e.to_string());
    }
    row
}

/// Samples the mutation and initialization distributions.
pub fn sample_distributions(cfg: &ExperimentConfig, seed: u64) -> Result<DistributionReport> {
    let s = &cfg.sample_dist;
    let (p_low, p_high) = log_symmetry_check(s.sigma, s.base, s.draws, &mut substream(seed, &[tag::MUTATE, 0]))?;
    let (base2_p_low, base2_p_high) = log_symmetry_check(s.sigma, 2.0, s.draws, &mut substream(seed, &[tag::MUTATE, 1]))?;
    let init_draws = (s.draws / 10).max(1);
    let mut rng = substream(seed, &[tag::HYPER]);
    let (mut lr, mut reg) = (Vec::with_capacity(init_draws), Vec::with_capacity(init_draws));
    for _ in 0..init_draws {
        let hp = init_hyperparams(&cfg.mutation, &mut rng);
        lr.push(hp.learning_rate().log10());
        reg.push(hp.regularization_rate().log10());
    }
    let lr_stats = stats(&lr).expect("nonempty");
    let reg_stats = stats(&reg).expect("nonempty");
    let expected_tail = if s.sigma > 0.0 {
        Normal::new(0.0, 1.0).expect("standard normal").cdf(-1.0 / s.sigma)
    } else {
        0.0
    };
    Ok(DistributionReport {
        sigma: s.sigma,
        base: s.base,
        draws: s.draws,
        p_low,
        p_high,
        expected_tail,
        base2_p_low,
        base2_p_high,
        init_draws,
        init_lr_log10_median: lr_stats.median,
        init_lr_log10_sd: lr_stats.sd,
        init_reg_log10_median: reg_stats.median,
        init_reg_log10_sd: reg_stats.sd,
    })
}

/// Runs every planned variant for every seed on an already prepared
/// workload.
pub fn run_on_workload(cfg: &ExperimentConfig, workload: &Workload) -> Result<TrialReport> {
    cfg.validate()?;
    let specs = plan_runs(cfg, workload.model.layers());
    let jobs: Vec<(&RunSpec, u64)> = specs
        .iter()
        .flat_map(|s| cfg.experiment.seeds.iter().map(move |&seed| (s, seed)))
        .collect();
    let rows: Vec<TrialRow> = jobs
        .par_iter()
        .map(|(spec, seed)| {
            log::info!("running {} (seed {seed})", spec.label);
            run_trial(cfg, workload, spec, *seed)
        })
        .collect();
    let test_accesses = workload
        .split
        .test
        .access_log()
        .into_iter()
        .map(|((m, s), n)| (m, s, n))
        .collect();
    Ok(TrialReport {
        mode: cfg.experiment.mode,
        data: workload.description.clone(),
        rows,
        test_accesses,
        distribution: None,
    })
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<TrialReport> {
    cfg.validate()?;
    if cfg.experiment.mode == Mode::SampleDist {
        return Ok(TrialReport {
            mode: Mode::SampleDist,
            data: "sampler draws".to_string(),
            rows: Vec::new(),
            test_accesses: Vec::new(),
            distribution: Some(sample_distributions(cfg, cfg.experiment.seeds[0])?),
        });
    }
    let workload = prepare_workload(cfg)?;
    run_on_workload(cfg, &workload)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(mode: Mode) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::preset(mode);
        cfg.data.source = DataSource::Synthetic;
        cfg.data.n = 200;
        cfg.experiment.seeds = vec![1, 2];
        cfg.popdescent.iterations = 2;
        cfg.popdescent.batches = 4;
        cfg.popdescent.batch_size = 16;
        cfg.random_search.trials = 3;
        cfg.random_search.budget = Some(400);
        cfg.schedule_search.trials = 3;
        cfg.schedule_search.budget = Some(400);
        cfg.grid_search.learning_rates = vec![0.01, 0.001];
        cfg.grid_search.regularization_rates = vec![0.001];
        cfg.grid_search.budget_per_model = Some(20);
        cfg
    }

    #[test]
    fn stats_and_median() {
        let s = stats(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(s.mean, 2.5);
        assert_eq!(s.median, 2.5);
        assert!((s.sd - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(stats(&[7.0]).unwrap().sd, 0.0);
        assert!(stats(&[]).is_none());
    }

    #[test]
    fn every_method_runs_with_exact_accounting() {
        let cfg = tiny(Mode::Benchmark);
        let report = run_experiment(&cfg).unwrap();
        assert_eq!(report.rows.len(), 5 * 2);
        for row in &report.rows {
            assert!(row.ok(), "{}: {:?}", row.method, row.error);
            assert_eq!(row.gradient_steps, row.expected_steps, "{}", row.method);
        }
        let pd = report.rows_for("popdescent").next().unwrap();
        assert_eq!(pd.gradient_steps, 2 * 5 * 4);
        let grid = report.rows_for("grid-search").next().unwrap();
        assert_eq!(grid.gradient_steps, 2 * 20);
        for (_, _, n) in &report.test_accesses {
            assert_eq!(*n, 1);
        }
        assert_eq!(report.test_accesses.len(), 10);
    }

    #[test]
    fn ablation_and_sensitivity_plans() {
        let cfg = tiny(Mode::Ablation);
        let specs = plan_runs(&cfg, 2);
        assert_eq!(specs.len(), 4);
        assert!(specs.iter().all(|s| s.popdescent.population == 10 && s.popdescent.elite() == 5));
        assert_eq!(specs[3].popdescent.fitness, FitnessSource::Training);
        assert!(!specs[1].mutation_enabled);
        assert_eq!(specs[0].regularized, vec![0, 1]);
        assert!(specs[2].regularized.is_empty());

        let cfg = tiny(Mode::Sensitivity);
        let specs = plan_runs(&cfg, 2);
        let lrs: Vec<f64> = specs.iter().map(|s| s.popdescent.learning_rate).collect();
        assert_eq!(lrs, vec![0.01, 0.05, 0.001, 0.01, 0.05, 0.001]);
        assert!(!specs[4].mutation_enabled);
    }

    #[test]
    fn budget_too_small_for_probes_is_reported_not_fatal() {
        let mut cfg = tiny(Mode::Benchmark);
        cfg.experiment.methods = vec![Method::RandomSearch];
        cfg.random_search.budget = Some(10);
        let report = run_experiment(&cfg).unwrap();
        assert!(report.rows.iter().all(|r| r.error.is_some() && r.test_loss.is_none()));
        assert!(report.test_accesses.is_empty());
    }
}
