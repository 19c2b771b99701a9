//! Competitor tuners: exhaustive grid search, random search with short
//! probes followed by a full early-stopped training run, and random search
//! over learning-rate schedules.

use rand::{Rng, RngCore};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::individual::{Hyperparams, LEARNING_RATE};
use crate::mutation::log_uniform;
use crate::rng::{derive_seed, substream, tag};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScheduleKind {
    Exponential,
    InverseTime,
    Polynomial,
}

impl ScheduleKind {
    pub const ALL: [ScheduleKind; 3] = [ScheduleKind::Exponential, ScheduleKind::InverseTime, ScheduleKind::Polynomial];
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduleSpec {
    pub kind: ScheduleKind,
    pub initial_lr: f64,
    pub decay_rate: f64,
    pub decay_steps: u64,
    /// Polynomial only.
    pub end_lr: f64,
    /// Polynomial only.
    pub power: f64,
}

impl ScheduleSpec {
    pub fn validate(&self) -> Result<()> {
        if self.decay_steps == 0 {
            return Err(Error::domain("decay_steps must be at least 1"));
        }
        if !(self.initial_lr > 0.0 && self.initial_lr.is_finite()) {
            return Err(Error::domain(format!("initial_lr = {} must be positive", self.initial_lr)));
        }
        match self.kind {
            ScheduleKind::Polynomial => {
                if !(self.end_lr >= 0.0 && self.power > 0.0) {
                    return Err(Error::domain("polynomial decay needs end_lr >= 0 and power > 0"));
                }
            }
            ScheduleKind::Exponential | ScheduleKind::InverseTime => {
                if !(self.decay_rate >= 0.0 && self.decay_rate.is_finite()) {
                    return Err(Error::domain(format!("decay_rate = {} must be >= 0", self.decay_rate)));
                }
            }
        }
        Ok(())
    }
}

/// Learning rate at `step`:
///
/// * exponential: `lr₀ · r^(step/s)`
/// * inverse time: `lr₀ / (1 + r · step/s)`
/// * polynomial: `(lr₀ − lr_end) · (1 − min(step, s)/s)^p + lr_end`
pub fn schedule_lr(spec: &ScheduleSpec, step: u64) -> Result<f64> {
    spec.validate()?;
    let s = spec.decay_steps as f64;
    let t = step as f64;
    Ok(match spec.kind {
        ScheduleKind::Exponential => spec.initial_lr * spec.decay_rate.powf(t / s),
        ScheduleKind::InverseTime => spec.initial_lr / (1.0 + spec.decay_rate * t / s),
        ScheduleKind::Polynomial => {
            let frac = 1.0 - t.min(s) / s;
            (spec.initial_lr - spec.end_lr) * frac.powf(spec.power) + spec.end_lr
        }
    })
}

/// True once the best CV loss is more than `patience` epochs old.
pub fn early_stop(cv_history: &[f64], patience: usize) -> bool {
    let Some(best) = cv_history
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1).then(a.0.cmp(&b.0)))
        .map(|(i, _)| i)
    else {
        return false;
    };
    cv_history.len() - 1 - best > patience
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Dimension {
    Discrete(Vec<f64>),
    LogUniform { low: f64, high: f64 },
}

/// Named hyper-parameter ranges. Must cover `learning_rate` and
/// `regularization_rate`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    dims: Vec<(String, Dimension)>,
}

impl SearchSpace {
    pub fn new(dims: Vec<(String, Dimension)>) -> Result<Self> {
        for (name, dim) in &dims {
            match dim {
                Dimension::Discrete(values) => {
                    if values.is_empty() {
                        return Err(Error::domain(format!("`{name}` has an empty value list")));
                    }
                }
                Dimension::LogUniform { low, high } => {
                    if !(*low > 0.0 && low < high && high.is_finite()) {
                        return Err(Error::domain(format!("`{name}` range [{low}, {high}] is not a valid log range")));
                    }
                }
            }
        }
        let space = Self { dims };
        space.to_hyperparams(&space.dims.iter().map(|(_, d)| first_value(d)).collect::<Vec<_>>())?;
        Ok(space)
    }

    pub fn grid(lrs: Vec<f64>, regs: Vec<f64>) -> Result<Self> {
        Self::new(vec![
            (LEARNING_RATE.to_string(), Dimension::Discrete(lrs)),
            (crate::individual::REGULARIZATION_RATE.to_string(), Dimension::Discrete(regs)),
        ])
    }

    pub fn log_ranges(lr: (f64, f64), reg: (f64, f64)) -> Result<Self> {
        Self::new(vec![
            (LEARNING_RATE.to_string(), Dimension::LogUniform { low: lr.0, high: lr.1 }),
            (
                crate::individual::REGULARIZATION_RATE.to_string(),
                Dimension::LogUniform { low: reg.0, high: reg.1 },
            ),
        ])
    }

    pub fn is_discrete(&self) -> bool {
        self.dims.iter().all(|(_, d)| matches!(d, Dimension::Discrete(_)))
    }

    fn to_hyperparams(&self, values: &[f64]) -> Result<Hyperparams> {
        Hyperparams::from_map(self.dims.iter().map(|(n, _)| n.clone()).zip(values.iter().copied()).collect())
    }

    /// Every grid point, first dimension varying slowest.
    pub fn cartesian(&self) -> Result<Vec<Hyperparams>> {
        if !self.is_discrete() {
            return Err(Error::domain("grid search needs an all-discrete search space"));
        }
        let mut points: Vec<Vec<f64>> = vec![vec![]];
        for (_, dim) in &self.dims {
            let Dimension::Discrete(values) = dim else { unreachable!() };
            points = points
                .into_iter()
                .flat_map(|p| {
                    values.iter().map(move |&v| {
                        let mut q = p.clone();
                        q.push(v);
                        q
                    })
                })
                .collect();
        }
        points.iter().map(|p| self.to_hyperparams(p)).collect()
    }

    pub fn sample(&self, rng: &mut dyn RngCore) -> Result<Hyperparams> {
        let values: Vec<f64> = self
            .dims
            .iter()
            .map(|(_, dim)| match dim {
                Dimension::Discrete(values) => values[rng.random_range(0..values.len())],
                Dimension::LogUniform { low, high } => log_uniform(*low, *high, rng),
            })
            .collect();
        self.to_hyperparams(&values)
    }
}

fn first_value(dim: &Dimension) -> f64 {
    match dim {
        Dimension::Discrete(v) => v.first().copied().unwrap_or(f64::NAN),
        Dimension::LogUniform { low, .. } => *low,
    }
}

/// Ranges for schedule search.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScheduleSpace {
    pub initial_lr: (f64, f64),
    pub end_lr: (f64, f64),
    pub regularization_rate: (f64, f64),
    pub decay_rate: (f64, f64),
    pub decay_steps: (u64, u64),
    pub power: (f64, f64),
}

impl Default for ScheduleSpace {
    fn default() -> Self {
        Self {
            initial_lr: (1e-4, 1e-2),
            end_lr: (1e-5, 1e-2),
            regularization_rate: (1e-5, 1e-1),
            decay_rate: (0.8, 0.99),
            decay_steps: (1000, 10000),
            power: (0.1, 2.0),
        }
    }
}

impl ScheduleSpace {
    /// Kind uniformly from the three schedules, then its parameters.
    pub fn sample(&self, rng: &mut dyn RngCore) -> Result<(Hyperparams, ScheduleSpec)> {
        let kind = ScheduleKind::ALL[rng.random_range(0..3)];
        let initial_lr = log_uniform(self.initial_lr.0, self.initial_lr.1, rng);
        let reg = log_uniform(self.regularization_rate.0, self.regularization_rate.1, rng);
        let decay_rate = rng.random_range(self.decay_rate.0..=self.decay_rate.1);
        let decay_steps = rng.random_range(self.decay_steps.0..=self.decay_steps.1);
        let (end_lr, power) = match kind {
            ScheduleKind::Polynomial => (
                log_uniform(self.end_lr.0, self.end_lr.1, rng).min(initial_lr),
                rng.random_range(self.power.0..=self.power.1),
            ),
            _ => (0.0, 1.0),
        };
        let spec = ScheduleSpec {
            kind,
            initial_lr,
            decay_rate,
            decay_steps,
            end_lr,
            power,
        };
        spec.validate()?;
        Ok((Hyperparams::new(initial_lr, reg)?, spec))
    }
}

/// How long a trainer runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TrainPlan {
    /// Exactly this many gradient steps on sampled minibatches.
    Steps(u64),
    /// Full passes over the training partition, optionally early-stopped on
    /// CV loss.
    Epochs { max_epochs: usize, patience: Option<usize> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainOutcome {
    pub theta: Vec<f64>,
    pub hyperparams: Hyperparams,
    pub schedule: Option<ScheduleSpec>,
    /// CV loss of the returned parameters.
    pub cv_loss: f64,
    /// CV loss after each epoch (or evaluation point for step plans).
    pub cv_history: Vec<f64>,
    /// `(cumulative gradient steps, cv loss)` pairs.
    pub trace: Vec<(u64, f64)>,
    pub gradient_steps: u64,
}

/// Trains a fresh model from a seed. Implementations must only touch the
/// training and cross-validation partitions.
pub trait Trainer: Sync {
    fn steps_per_epoch(&self) -> u64;

    fn train(&self, hp: &Hyperparams, schedule: Option<&ScheduleSpec>, plan: TrainPlan, seed: u64) -> Result<TrainOutcome>;
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialRecord {
    pub hyperparams: Hyperparams,
    pub schedule: Option<ScheduleSpec>,
    pub cv_loss: f64,
    pub gradient_steps: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchOutcome {
    pub model: TrainOutcome,
    pub trials: Vec<TrialRecord>,
    /// Every gradient step taken, probes included.
    pub gradient_steps: u64,
}

fn record(t: &TrainOutcome) -> TrialRecord {
    TrialRecord {
        hyperparams: t.hyperparams.clone(),
        schedule: t.schedule,
        cv_loss: t.cv_loss,
        gradient_steps: t.gradient_steps,
    }
}

/// Index of the lowest CV loss; non-finite losses never win and ties go to
/// the earliest trial.
fn argmin_cv(losses: impl Iterator<Item = f64>) -> Option<usize> {
    losses
        .enumerate()
        .filter(|(_, l)| l.is_finite())
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
        .map(|(i, _)| i)
}

/// Trains one model per grid point for `budget_per_model` steps and keeps
/// the one with the lowest final CV loss.
pub fn grid_search(space: &SearchSpace, trainer: &dyn Trainer, budget_per_model: u64, seed: u64) -> Result<SearchOutcome> {
    let points = space.cartesian()?;
    if points.is_empty() {
        return Err(Error::domain("empty grid"));
    }
    let outcomes: Vec<TrainOutcome> = points
        .par_iter()
        .enumerate()
        .map(|(i, hp)| trainer.train(hp, None, TrainPlan::Steps(budget_per_model), derive_seed(seed, &[tag::TRIAL, i as u64])))
        .collect::<Result<_>>()?;
    let best = argmin_cv(outcomes.iter().map(|o| o.cv_loss)).unwrap_or(0);
    let trials = outcomes.iter().map(record).collect();
    let gradient_steps = outcomes.iter().map(|o| o.gradient_steps).sum();
    Ok(SearchOutcome {
        model: outcomes.into_iter().nth(best).expect("best index in range"),
        trials,
        gradient_steps,
    })
}

fn probe_then_train(
    candidates: Vec<(Hyperparams, Option<ScheduleSpec>)>,
    probe_epochs: usize,
    full: TrainPlan,
    trainer: &dyn Trainer,
    seed: u64,
) -> Result<SearchOutcome> {
    if candidates.is_empty() {
        return Err(Error::domain("random search needs at least one trial"));
    }
    let probe = TrainPlan::Epochs {
        max_epochs: probe_epochs,
        patience: None,
    };
    let probes: Vec<TrainOutcome> = candidates
        .par_iter()
        .enumerate()
        .map(|(i, (hp, sched))| trainer.train(hp, sched.as_ref(), probe, derive_seed(seed, &[tag::TRIAL, i as u64])))
        .collect::<Result<_>>()?;
    let winner = argmin_cv(probes.iter().map(|p| p.cv_loss)).unwrap_or(0);
    let (hp, sched) = &candidates[winner];
    // the winner is retrained from a fresh initialization
    let model = trainer.train(hp, sched.as_ref(), full, derive_seed(seed, &[tag::FINAL]))?;
    let gradient_steps = probes.iter().map(|p| p.gradient_steps).sum::<u64>() + model.gradient_steps;
    Ok(SearchOutcome {
        trials: probes.iter().map(record).collect(),
        model,
        gradient_steps,
    })
}

/// Samples `trials` combinations, probes each for `probe_epochs` epochs,
/// then fully trains the best probe's hyper-parameters under `full`.
pub fn random_search(
    space: &SearchSpace,
    trials: usize,
    probe_epochs: usize,
    full: TrainPlan,
    trainer: &dyn Trainer,
    seed: u64,
) -> Result<SearchOutcome> {
    let mut rng = substream(seed, &[tag::HYPER]);
    let candidates = (0..trials)
        .map(|_| space.sample(&mut rng).map(|hp| (hp, None)))
        .collect::<Result<Vec<_>>>()?;
    probe_then_train(candidates, probe_epochs, full, trainer, seed)
}

/// Random search over schedule kinds and their parameters.
pub fn schedule_search(
    space: &ScheduleSpace,
    trials: usize,
    probe_epochs: usize,
    full: TrainPlan,
    trainer: &dyn Trainer,
    seed: u64,
) -> Result<SearchOutcome> {
    let mut rng = substream(seed, &[tag::HYPER]);
    let candidates = (0..trials)
        .map(|_| space.sample(&mut rng).map(|(hp, s)| (hp, Some(s))))
        .collect::<Result<Vec<_>>>()?;
    probe_then_train(candidates, probe_epochs, full, trainer, seed)
}
