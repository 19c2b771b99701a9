//! The Population Descent loop.
//!
//! One iteration:
//!
//! 1. sample a set of training batches and run the local optimizer on every
//!    member over them,
//! 2. sample one cross-validation batch and score every member with
//!    `fitness = 2 / (2 + loss)`,
//! 3. discard the `|P| − m` weakest members (ties: lowest id first),
//! 4. for each discarded slot, draw a source member from the multinomial
//!    whose probabilities are the normalized fitness values (with
//!    replacement, over all members including the weak ones) and insert a
//!    copy mutated with magnitude `1 − fitness(source)`.
//!
//! The `m` fittest members pass through bit-identical.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Batch, BatchSource};
use crate::error::{Error, Result};
use crate::individual::{Hyperparams, Individual};
use crate::localsearch::{local_update, LocalOptimizer, Model};
use crate::mutation::{init_hyperparams, mutate_counted, Mutated, MutationConfig};
use crate::rng::{substream, tag};

/// A fitness score in `[0, 1]`; higher is better.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct FitnessValue(f64);

impl FitnessValue {
    pub fn new(value: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::domain(format!("fitness {value} outside [0, 1]")));
        }
        Ok(Self(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Mutation strength for a member with this fitness.
    pub fn magnitude(self) -> f64 {
        1.0 - self.0
    }
}

/// `2 / (2 + loss)`
pub fn fitness_from_loss(loss: f64) -> Result<FitnessValue> {
    if !(loss >= 0.0 && loss.is_finite()) {
        return Err(Error::domain(format!("loss {loss} must be finite and non-negative")));
    }
    FitnessValue::new(2.0 / (2.0 + loss))
}

/// Normalizes fitness values into replacement probabilities. An all-zero
/// vector yields the uniform distribution.
pub fn build_fitness_distribution(fitnesses: &[FitnessValue]) -> Result<Vec<f64>> {
    if fitnesses.is_empty() {
        return Err(Error::domain("cannot build a distribution over zero members"));
    }
    let total: f64 = fitnesses.iter().map(|f| f.0).sum();
    if total == 0.0 {
        let p = 1.0 / fitnesses.len() as f64;
        return Ok(vec![p; fitnesses.len()]);
    }
    Ok(fitnesses.iter().map(|f| f.0 / total).collect())
}

/// A fixed-size population with elite count `m`.
#[derive(Clone, Debug, PartialEq)]
pub struct Population {
    members: Vec<Individual>,
    elite: usize,
}

/// How the initial hyper-parameters are chosen.
#[derive(Clone, Debug, PartialEq)]
pub enum HyperInit {
    /// Every member starts with the same values.
    Fixed(Hyperparams),
    /// Each member draws from the configured log-normal initializers.
    Random(MutationConfig),
}

impl Population {
    pub fn new(members: Vec<Individual>, elite: usize) -> Result<Self> {
        if elite == 0 || elite >= members.len() {
            return Err(Error::domain(format!(
                "elite count m = {elite} must satisfy 0 < m < |P| = {}",
                members.len()
            )));
        }
        let mut ids: Vec<usize> = members.iter().map(|m| m.id).collect();
        ids.sort_unstable();
        ids.dedup();
        if ids.len() != members.len() {
            return Err(Error::domain("member ids must be unique"));
        }
        Ok(Self { members, elite })
    }

    /// Members `0..size` with seeded parameter initialization.
    pub fn initialize(
        model: &dyn Model,
        size: usize,
        elite: usize,
        init: &HyperInit,
        optimizer: &LocalOptimizer,
        seed: u64,
    ) -> Result<Self> {
        let members = (0..size)
            .map(|id| {
                let mut rng = substream(seed, &[tag::INIT, id as u64]);
                let theta = model.init_params(&mut rng);
                let alpha = match init {
                    HyperInit::Fixed(hp) => hp.clone(),
                    HyperInit::Random(cfg) => init_hyperparams(cfg, &mut substream(seed, &[tag::HYPER, id as u64])),
                };
                let state = optimizer.fresh_state(theta.len());
                Individual::new(id, theta, alpha, state)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(members, elite)
    }

    pub fn members(&self) -> &[Individual] {
        &self.members
    }

    pub fn elite(&self) -> usize {
        self.elite
    }

    pub fn size(&self) -> usize {
        self.members.len()
    }

    pub fn into_members(self) -> Vec<Individual> {
        self.members
    }
}

/// Which data the selection step scores members on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitnessSource {
    CrossValidation,
    /// Scores on a fresh training batch (ablation only).
    Training,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EngineConfig {
    pub optimizer: LocalOptimizer,
    /// Minibatches sampled per iteration; every member trains on all of them.
    pub batches_per_iteration: usize,
    /// Passes over the iteration's minibatches.
    pub epochs_per_iteration: usize,
    pub mutation: MutationConfig,
    /// When false, replacements are copied without mutation.
    pub mutation_enabled: bool,
    /// When false, selection is skipped and members evolve independently.
    pub replacement_enabled: bool,
    pub fitness_source: FitnessSource,
}

impl EngineConfig {
    pub fn new(optimizer: LocalOptimizer) -> Self {
        Self {
            optimizer,
            batches_per_iteration: 1,
            epochs_per_iteration: 1,
            mutation: MutationConfig::default(),
            mutation_enabled: true,
            replacement_enabled: true,
            fitness_source: FitnessSource::CrossValidation,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.batches_per_iteration == 0 || self.epochs_per_iteration == 0 {
            return Err(Error::domain("batches and epochs per iteration must be at least 1"));
        }
        self.mutation.validate()
    }

    pub fn steps_per_member(&self) -> u64 {
        (self.batches_per_iteration * self.epochs_per_iteration) as u64
    }
}

/// Stopping rule evaluated before each iteration.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Convergence {
    FixedIterations(usize),
}

impl Convergence {
    pub fn is_converged(&self, _population: &Population, completed: usize) -> bool {
        match *self {
            Convergence::FixedIterations(n) => completed >= n,
        }
    }
}

/// What the replacement step did.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Replacement {
    /// Discarded members, weakest first; each slot is reused by a replacement.
    pub replaced_ids: Vec<usize>,
    pub source_ids: Vec<usize>,
    pub magnitudes: Vec<f64>,
    pub clamp_events: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    pub iteration: usize,
    /// Member ids in population order; the per-member vectors align with it.
    pub member_ids: Vec<usize>,
    pub fitness: Vec<f64>,
    pub losses: Vec<f64>,
    pub learning_rates: Vec<f64>,
    pub regularization_rates: Vec<f64>,
    pub best_id: usize,
    pub best_loss: f64,
    pub replacement: Replacement,
    pub gradient_steps: u64,
}

fn argmax_lowest_id(members: &[Individual], fitnesses: &[FitnessValue]) -> usize {
    (0..members.len())
        .reduce(|best, i| {
            match fitnesses[i].0.total_cmp(&fitnesses[best].0) {
                std::cmp::Ordering::Greater => i,
                std::cmp::Ordering::Equal if members[i].id < members[best].id => i,
                _ => best,
            }
        })
        .expect("population is nonempty")
}

/// Keeps the `m` fittest members and refills the other slots with mutated
/// copies drawn from the fitness-weighted multinomial.
///
/// `mutate_fn(source, magnitude, slot_id)` produces a replacement; its
/// result takes the id of the discarded member whose slot it fills.
pub fn replace_weakest<R, F>(
    optimized: Population,
    fitnesses: &[FitnessValue],
    rng: &mut R,
    mut mutate_fn: F,
) -> Result<(Population, Replacement)>
where
    R: Rng + ?Sized,
    F: FnMut(&Individual, f64, usize) -> Result<Mutated>,
{
    let size = optimized.size();
    if fitnesses.len() != size {
        return Err(Error::domain(format!(
            "{} fitness values for {size} members",
            fitnesses.len()
        )));
    }
    let members = &optimized.members;
    let mut order: Vec<usize> = (0..size).collect();
    order.sort_by(|&a, &b| {
        fitnesses[a]
            .0
            .total_cmp(&fitnesses[b].0)
            .then(members[a].id.cmp(&members[b].id))
    });
    let probs = build_fitness_distribution(fitnesses)?;
    let sampler = WeightedIndex::new(&probs).map_err(|e| Error::domain(format!("replacement sampler: {e}")))?;

    let mut record = Replacement::default();
    let mut fresh = Vec::with_capacity(size - optimized.elite);
    for &weak in &order[..size - optimized.elite] {
        let src = sampler.sample(rng);
        let magnitude = fitnesses[src].magnitude();
        let slot_id = members[weak].id;
        let mut out = mutate_fn(&members[src], magnitude, slot_id)?;
        out.individual.id = slot_id;
        record.replaced_ids.push(slot_id);
        record.source_ids.push(members[src].id);
        record.magnitudes.push(magnitude);
        record.clamp_events += out.clamped;
        fresh.push((weak, out.individual));
    }
    let mut next = optimized.members;
    for (pos, ind) in fresh {
        next[pos] = ind;
    }
    Ok((
        Population {
            members: next,
            elite: optimized.elite,
        },
        record,
    ))
}

fn sample_batches(source: &dyn BatchSource, count: usize, seed: u64, path: &[u64]) -> Result<Vec<Batch>> {
    let mut rng = substream(seed, path);
    (0..count).map(|_| source.sample(&mut rng)).collect()
}

/// Scores every member on `batch`; errors name the failing member.
pub fn score_members(model: &dyn Model, members: &[Individual], batch: &Batch) -> Result<(Vec<f64>, Vec<FitnessValue>)> {
    let scored: Vec<(f64, FitnessValue)> = members
        .par_iter()
        .map(|m| {
            let loss = model
                .loss(&m.theta, batch, m.regularization_rate())
                .and_then(|r| fitness_from_loss(r.total).map(|f| (r.total, f)))
                .map_err(|e| Error::for_individual(m.id, e))?;
            Ok(loss)
        })
        .collect::<Result<_>>()?;
    Ok(scored.into_iter().unzip())
}

fn scoring_batch(
    config: &EngineConfig,
    train: &dyn BatchSource,
    cv: &dyn BatchSource,
    seed: u64,
    path: &[u64],
) -> Result<Batch> {
    let mut rng = substream(seed, path);
    match config.fitness_source {
        FitnessSource::CrossValidation => cv.sample(&mut rng),
        FitnessSource::Training => train.sample(&mut rng),
    }
}

/// One local-update/selection/mutation round.
pub fn popdescent_iteration(
    population: Population,
    model: &dyn Model,
    train: &dyn BatchSource,
    cv: &dyn BatchSource,
    config: &EngineConfig,
    seed: u64,
    iteration: usize,
) -> Result<(Population, IterationTrace)> {
    config.validate()?;
    let it = iteration as u64;
    let batches = sample_batches(train, config.batches_per_iteration, seed, &[tag::TRAIN, it])?;

    let mut optimized = population;
    let steps: Vec<u64> = optimized
        .members
        .par_iter_mut()
        .map(|m| {
            local_update(model, &config.optimizer, m, &batches, config.epochs_per_iteration)
                .map(|(_, s)| s)
                .map_err(|e| Error::for_individual(m.id, e))
        })
        .collect::<Result<_>>()?;

    let batch = scoring_batch(config, train, cv, seed, &[tag::CV, it])?;
    let (losses, fitnesses) = score_members(model, &optimized.members, &batch)?;
    let best = argmax_lowest_id(&optimized.members, &fitnesses);

    let mut trace = IterationTrace {
        iteration,
        member_ids: optimized.members.iter().map(|m| m.id).collect(),
        fitness: fitnesses.iter().map(|f| f.0).collect(),
        losses: losses.clone(),
        learning_rates: optimized.members.iter().map(|m| m.learning_rate()).collect(),
        regularization_rates: optimized.members.iter().map(|m| m.regularization_rate()).collect(),
        best_id: optimized.members[best].id,
        best_loss: losses[best],
        replacement: Replacement::default(),
        gradient_steps: steps.iter().sum(),
    };

    if !config.replacement_enabled {
        return Ok((optimized, trace));
    }
    let mut select_rng = substream(seed, &[tag::SELECT, it]);
    let (next, record) = replace_weakest(optimized, &fitnesses, &mut select_rng, |src, magnitude, slot| {
        let magnitude = if config.mutation_enabled { magnitude } else { 0.0 };
        let mut rng = substream(seed, &[tag::MUTATE, it, slot as u64]);
        mutate_counted(src, magnitude, &config.mutation, &mut rng)
    })?;
    trace.replacement = record;
    Ok((next, trace))
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunOutcome {
    /// Fittest member of the final population on a fresh scoring batch.
    pub best: Individual,
    pub best_fitness: FitnessValue,
    pub best_loss: f64,
    pub population: Population,
    pub traces: Vec<IterationTrace>,
    /// Highest fitness seen at any iteration (reporting only).
    pub best_ever_fitness: f64,
    pub gradient_steps: u64,
}

/// Iterates until `converged(population, completed_iterations)` holds, then
/// returns the fittest member on a fresh batch (ties: lowest id).
#[allow(clippy::too_many_arguments)]
pub fn run(
    population: Population,
    mut converged: impl FnMut(&Population, usize) -> bool,
    model: &dyn Model,
    train: &dyn BatchSource,
    cv: &dyn BatchSource,
    config: &EngineConfig,
    seed: u64,
) -> Result<RunOutcome> {
    config.validate()?;
    let mut population = population;
    let mut traces = Vec::new();
    while !converged(&population, traces.len()) {
        let (next, trace) = popdescent_iteration(population, model, train, cv, config, seed, traces.len())?;
        log::debug!(
            "iteration {}: best id {} loss {:.4}, replaced {:?}",
            trace.iteration,
            trace.best_id,
            trace.best_loss,
            trace.replacement.replaced_ids
        );
        population = next;
        traces.push(trace);
    }
    let batch = scoring_batch(config, train, cv, seed, &[tag::FINAL])?;
    let (losses, fitnesses) = score_members(model, &population.members, &batch)?;
    let best = argmax_lowest_id(&population.members, &fitnesses);
    let best_ever_fitness = traces
        .iter()
        .flat_map(|t| t.fitness.iter().copied())
        .chain(std::iter::once(fitnesses[best].0))
        .fold(0.0, f64::max);
    Ok(RunOutcome {
        best: population.members[best].clone(),
        best_fitness: fitnesses[best],
        best_loss: losses[best],
        gradient_steps: traces.iter().map(|t| t.gradient_steps).sum(),
        population,
        traces,
        best_ever_fitness,
    })
}
