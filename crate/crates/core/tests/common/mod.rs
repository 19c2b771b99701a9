//! Checks shared by the property, oracle and acceptance targets. Each check
//! returns `Err(description)` on failure so the acceptance runner can report
//! it instead of panicking.
#![allow(dead_code)]

use std::collections::BTreeSet;

use popdescent::baselines::{grid_search, ScheduleSpec, SearchSpace, TrainOutcome, TrainPlan, Trainer};
use popdescent::engine::Replacement;
use popdescent::harness::accounting::{gradient_steps, grid_search_steps};
use popdescent::harness::{make_synthetic, SyntheticKind};
use popdescent::localsearch::{AnalyticModel, Objective};
use popdescent::mutation::{init_hyperparams, log_symmetry_check, mutate, mutate_counted, LogInit};
use popdescent::rng::{substream, tag};
use popdescent::{
    build_fitness_distribution, popdescent_iteration, replace_weakest, run, AdamConfig, Batch, BatchSource, Dataset,
    EngineConfig, FitnessValue, FixedBatch, HyperInit, Hyperparams, Individual, LocalOptimizer, MlpSpec, Model,
    MutationConfig, OptState, Population, SampledStream,
};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};
use rand::Rng;

pub type Check = Result<String, String>;

pub const PROPERTY_CASES: u32 = 1000;

pub fn run_property<S: Strategy>(
    name: &str,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String> {
    let mut runner = TestRunner::new(Config {
        cases: PROPERTY_CASES,
        failure_persistence: None,
        ..Config::default()
    });
    runner.run(&strategy, test).map_err(|e| format!("{name}: {e}"))
}

// ---------------------------------------------------------------- engine

#[derive(Clone, Debug)]
pub struct PopCase {
    pub size: usize,
    pub elite: usize,
    pub dim: usize,
    pub iterations: usize,
    pub lr: f64,
    pub seed: u64,
}

pub fn pop_case() -> impl Strategy<Value = PopCase> {
    (2usize..=12, 1usize..=4, 1usize..=3, 1e-3f64..0.2, any::<u64>()).prop_flat_map(
        |(size, dim, iterations, lr, seed)| {
            (1..size).prop_map(move |elite| PopCase {
                size,
                elite,
                dim,
                iterations,
                lr,
                seed,
            })
        },
    )
}

fn adam() -> LocalOptimizer {
    LocalOptimizer::Adam(AdamConfig::default())
}

pub fn size_invariance(case: PopCase) -> Result<(), TestCaseError> {
    let model = AnalyticModel::new(Objective::Sphere, case.dim);
    let init = HyperInit::Fixed(Hyperparams::new(case.lr, 1e-3).unwrap());
    let mut pop = Population::initialize(&model, case.size, case.elite, &init, &adam(), case.seed).unwrap();
    let source = FixedBatch::placeholder();
    let mut cfg = EngineConfig::new(adam());
    cfg.batches_per_iteration = 2;
    let ids: BTreeSet<usize> = (0..case.size).collect();
    for it in 0..case.iterations {
        let (next, trace) = popdescent_iteration(pop, &model, &source, &source, &cfg, case.seed, it).unwrap();
        prop_assert_eq!(next.size(), case.size);
        prop_assert_eq!(next.elite(), case.elite);
        prop_assert_eq!(next.members().iter().map(|m| m.id).collect::<BTreeSet<_>>(), ids.clone());
        prop_assert_eq!(trace.member_ids.len(), case.size);
        pop = next;
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct SelectionCase {
    pub thetas: Vec<Vec<f64>>,
    pub fitness: Vec<f64>,
    pub elite: usize,
    pub seed: u64,
}

pub fn selection_case() -> impl Strategy<Value = SelectionCase> {
    (2usize..=16, 1usize..=5).prop_flat_map(|(size, dim)| {
        // a coarse fitness grid makes ties common
        let fitness = prop::collection::vec((0u32..=8).prop_map(|k| k as f64 / 8.0), size);
        let thetas = prop::collection::vec(prop::collection::vec(-5.0f64..5.0, dim), size);
        (thetas, fitness, 1..size, any::<u64>()).prop_map(|(thetas, fitness, elite, seed)| SelectionCase {
            thetas,
            fitness,
            elite,
            seed,
        })
    })
}

fn selection_population(case: &SelectionCase) -> Population {
    let members = case
        .thetas
        .iter()
        .enumerate()
        .map(|(id, t)| {
            let hp = Hyperparams::new(1e-3 * (id + 1) as f64, 1e-2).unwrap();
            Individual::new(id, t.clone(), hp, OptState::Sgd).unwrap()
        })
        .collect();
    Population::new(members, case.elite).unwrap()
}

/// Independent oracle: discard the size - m lowest fitness values, ties
/// discarding the lowest id first; everyone else survives.
fn expected_survivors(fitness: &[f64], elite: usize) -> BTreeSet<usize> {
    let mut order: Vec<usize> = (0..fitness.len()).collect();
    order.sort_by(|&a, &b| fitness[a].partial_cmp(&fitness[b]).unwrap().then(a.cmp(&b)));
    order.into_iter().skip(fitness.len() - elite).collect()
}

fn select(case: &SelectionCase) -> (Population, Population, Replacement) {
    let pop = selection_population(case);
    let fit: Vec<FitnessValue> = case.fitness.iter().map(|&f| FitnessValue::new(f).unwrap()).collect();
    let cfg = MutationConfig::default();
    let seed = case.seed;
    let (next, rec) = replace_weakest(pop.clone(), &fit, &mut substream(seed, &[tag::SELECT]), |src, mag, slot| {
        mutate_counted(src, mag, &cfg, &mut substream(seed, &[tag::MUTATE, slot as u64]))
    })
    .unwrap();
    (pop, next, rec)
}

pub fn elite_preservation(case: SelectionCase) -> Result<(), TestCaseError> {
    let (before, after, rec) = select(&case);
    let survivors = expected_survivors(&case.fitness, case.elite);
    let replaced: BTreeSet<usize> = rec.replaced_ids.iter().copied().collect();
    for (pos, (old, new)) in before.members().iter().zip(after.members()).enumerate() {
        prop_assert_eq!(new.id, old.id, "slot {} changed id", pos);
        if survivors.contains(&old.id) {
            prop_assert!(new.bit_identical(old), "elite {} altered", old.id);
            prop_assert!(!replaced.contains(&old.id));
        } else {
            prop_assert!(replaced.contains(&old.id), "non-elite {} kept", old.id);
        }
    }
    Ok(())
}

pub fn replacement_count(case: SelectionCase) -> Result<(), TestCaseError> {
    let (before, after, rec) = select(&case);
    let expected = before.size() - case.elite;
    prop_assert_eq!(rec.replaced_ids.len(), expected);
    prop_assert_eq!(rec.replaced_ids.iter().collect::<BTreeSet<_>>().len(), expected);
    prop_assert_eq!(rec.source_ids.len(), expected);
    prop_assert_eq!(after.size(), before.size());
    for (src, mag) in rec.source_ids.iter().zip(&rec.magnitudes) {
        prop_assert_eq!(*mag, 1.0 - case.fitness[*src]);
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct MutateCase {
    pub theta: Vec<f64>,
    pub lr: f64,
    pub reg: f64,
    pub adam: bool,
    pub seed: u64,
}

pub fn mutate_case() -> impl Strategy<Value = MutateCase> {
    (
        prop::collection::vec(-1e3f64..1e3, 1..40),
        1e-8f64..10.0,
        1e-8f64..10.0,
        any::<bool>(),
        any::<u64>(),
    )
        .prop_map(|(theta, lr, reg, adam, seed)| MutateCase {
            theta,
            lr,
            reg,
            adam,
            seed,
        })
}

pub fn mutate_at_zero(case: MutateCase) -> Result<(), TestCaseError> {
    let n = case.theta.len();
    let state = if case.adam {
        adam().fresh_state(n)
    } else {
        OptState::Sgd
    };
    let ind = Individual::new(3, case.theta, Hyperparams::new(case.lr, case.reg).unwrap(), state).unwrap();
    let out = mutate(&ind, 0.0, &MutationConfig::default(), &mut substream(case.seed, &[])).unwrap();
    prop_assert!(out.bit_identical(&ind));
    Ok(())
}

pub fn fitness_vector() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(
        prop_oneof![Just(0.0), Just(1.0), 0.0f64..=1.0, 1e-300f64..1e-250],
        1..64,
    )
}

pub fn normalization(fitness: Vec<f64>) -> Result<(), TestCaseError> {
    let fv: Vec<FitnessValue> = fitness.iter().map(|&f| FitnessValue::new(f).unwrap()).collect();
    let p = build_fitness_distribution(&fv).unwrap();
    prop_assert_eq!(p.len(), fitness.len());
    prop_assert!(p.iter().all(|&x| (0.0..=1.0).contains(&x)));
    let sum: f64 = p.iter().sum();
    prop_assert!((sum - 1.0).abs() <= 1e-12, "sum = {}", sum);
    let total: f64 = fitness.iter().sum();
    if total > 0.0 {
        for (pi, fi) in p.iter().zip(&fitness) {
            prop_assert!((pi - fi / total).abs() <= 1e-12);
        }
    } else {
        prop_assert!(p.iter().all(|&x| x == 1.0 / fitness.len() as f64));
    }
    Ok(())
}

fn tiny_mlp_data(seed: u64) -> Dataset {
    make_synthetic(SyntheticKind::Blobs, 40, 0.5, &mut substream(seed, &[tag::DATA])).unwrap()
}

pub fn seed_determinism(case: PopCase) -> Result<(), TestCaseError> {
    let data = tiny_mlp_data(case.seed);
    let model = MlpSpec::relu(vec![2, 4, 2], [0]).unwrap();
    let source = SampledStream::new(&data, 8);
    let mut cfg = EngineConfig::new(adam());
    cfg.batches_per_iteration = 2;
    let init = HyperInit::Random(MutationConfig::default());
    let go = || {
        let pop = Population::initialize(&model, case.size, case.elite, &init, &adam(), case.seed).unwrap();
        let out = run(pop, |_, n| n >= case.iterations, &model, &source, &source, &cfg, case.seed);
        // a divergent random draw must fail identically too
        match out {
            Ok(o) => (serde_json::to_string(&o.traces).unwrap(), format!("{:?}", o.best)),
            Err(e) => (String::new(), e.to_string()),
        }
    };
    let (a, b) = (go(), go());
    prop_assert_eq!(a.0.as_bytes(), b.0.as_bytes());
    prop_assert_eq!(a.1, b.1);
    Ok(())
}

/// The six engine properties, `PROPERTY_CASES` cases each.
pub fn engine_property_suite() -> Check {
    run_property("population size invariance", pop_case(), size_invariance)?;
    run_property("elite bit-preservation", selection_case(), elite_preservation)?;
    run_property("mutate at zero magnitude", mutate_case(), mutate_at_zero)?;
    run_property("replacement count", selection_case(), replacement_count)?;
    run_property("probability normalization", fitness_vector(), normalization)?;
    run_property("seed determinism", pop_case(), seed_determinism)?;
    Ok(format!("6 properties x {PROPERTY_CASES} cases"))
}

// ---------------------------------------------------------------- gradients

pub const GRAD_TOLERANCE: f64 = 1e-5;
pub const GRAD_H: f64 = 1e-6;

fn image_like_batch(rng: &mut impl Rng, size: usize) -> Batch {
    // sparse, pixel-like inputs in [0, 1]
    let inputs = (0..size * 784)
        .map(|_| if rng.random_bool(0.5) { 0.0 } else { rng.random_range(0.0..1.0) })
        .collect();
    let targets = (0..size).map(|_| rng.random_range(0..10)).collect();
    Batch::new(inputs, 784, targets).unwrap()
}

fn rel_error(a: &[f64], b: &[f64]) -> f64 {
    let diff = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let scale = a.iter().map(|x| x * x).sum::<f64>().sqrt().max(b.iter().map(|x| x * x).sum::<f64>().sqrt());
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

/// Worst relative error of backprop against central differences over
/// `draws` random `(θ, batch)` pairs, with and without the penalty.
pub fn gradient_oracle(draws: usize) -> Result<(f64, f64), String> {
    let model = MlpSpec::relu(vec![784, 16, 10], [0, 1]).map_err(|e| e.to_string())?;
    let mut rng = substream(77, &[]);
    let (mut worst_plain, mut worst_reg) = (0.0f64, 0.0f64);
    for _ in 0..draws {
        let theta = model.init_params(&mut rng);
        let batch = image_like_batch(&mut rng, 4);
        let reg = 10f64.powf(rng.random_range(-3.0..0.0));
        for (rate, worst) in [(0.0, &mut worst_plain), (reg, &mut worst_reg)] {
            let (_, grad) = model.loss_and_grad(&theta, &batch, rate).map_err(|e| e.to_string())?;
            let numeric = popdescent::localsearch::finite_diff_grad(
                |t| model.loss(t, &batch, rate).unwrap().total,
                &theta,
                GRAD_H,
            )
            .map_err(|e| e.to_string())?;
            *worst = worst.max(rel_error(&grad, &numeric));
        }
    }
    Ok((worst_plain, worst_reg))
}

pub fn gradient_oracle_check() -> Check {
    let (plain, reg) = gradient_oracle(20)?;
    let detail = format!("max rel error {plain:.2e} without penalty, {reg:.2e} with penalty (tol {GRAD_TOLERANCE:e})");
    if plain <= GRAD_TOLERANCE && reg <= GRAD_TOLERANCE {
        Ok(detail)
    } else {
        Err(detail)
    }
}

// ---------------------------------------------------------------- reduction

/// With mutation and replacement off, each member must follow exactly the
/// trajectory of an independent SGD run fed the same batch substreams.
pub fn random_search_reduction() -> Check {
    let seed = 4242;
    let data = make_synthetic(SyntheticKind::TwoMoons, 400, 0.2, &mut substream(seed, &[tag::DATA])).unwrap();
    let model = MlpSpec::relu(vec![2, 16, 2], [0]).unwrap();
    let train = SampledStream::new(&data, 32);
    let mutation = MutationConfig {
        lr_init: LogInit {
            mean: -1.5,
            sd: 0.5,
            base: 10.0,
        },
        ..MutationConfig::default()
    };
    let mut cfg = EngineConfig::new(LocalOptimizer::Sgd);
    cfg.batches_per_iteration = 5;
    cfg.mutation_enabled = false;
    cfg.replacement_enabled = false;
    let (size, iterations) = (6, 12);
    let mut pop = Population::initialize(&model, size, 2, &HyperInit::Random(mutation), &LocalOptimizer::Sgd, seed)
        .map_err(|e| e.to_string())?;

    // reference runs, one per member, written against the raw pieces
    let mut reference: Vec<(Vec<f64>, f64, f64)> = (0..size)
        .map(|id| {
            let theta = model.init_params(&mut substream(seed, &[tag::INIT, id as u64]));
            let hp = init_hyperparams(&mutation, &mut substream(seed, &[tag::HYPER, id as u64]));
            (theta, hp.learning_rate(), hp.regularization_rate())
        })
        .collect();
    for it in 0..iterations {
        let (next, _) = popdescent_iteration(pop, &model, &train, &train, &cfg, seed, it).map_err(|e| e.to_string())?;
        pop = next;
        for (id, (theta, lr, reg)) in reference.iter_mut().enumerate() {
            let mut rng = substream(seed, &[tag::TRAIN, it as u64]);
            for _ in 0..cfg.batches_per_iteration {
                let batch = train.sample(&mut rng).unwrap();
                let (_, grad) = model.loss_and_grad(theta, &batch, *reg).unwrap();
                for (w, g) in theta.iter_mut().zip(&grad) {
                    *w -= *lr * g;
                }
            }
            let member = &pop.members()[id];
            let same = member.id == id
                && member.learning_rate() == *lr
                && member.theta.iter().zip(theta.iter()).all(|(a, b)| a.to_bits() == b.to_bits());
            if !same {
                return Err(format!("member {id} diverged from its independent run at iteration {it}"));
            }
        }
    }
    Ok(format!("{size} members x {iterations} iterations bit-identical"))
}

// ---------------------------------------------------------------- accounting

/// Counts steps without training, so a full-budget grid costs nothing.
pub struct CountingTrainer;

impl Trainer for CountingTrainer {
    fn steps_per_epoch(&self) -> u64 {
        100
    }

    fn train(
        &self,
        hp: &Hyperparams,
        schedule: Option<&ScheduleSpec>,
        plan: TrainPlan,
        _seed: u64,
    ) -> popdescent::Result<TrainOutcome> {
        let steps = match plan {
            TrainPlan::Steps(n) => n,
            TrainPlan::Epochs { max_epochs, .. } => max_epochs as u64 * self.steps_per_epoch(),
        };
        // the grid optimum sits at lr = 1e-3, reg = 1e-4
        let cv_loss = (hp.learning_rate().log10() + 3.0).powi(2) + (hp.regularization_rate().log10() + 4.0).powi(2);
        Ok(TrainOutcome {
            theta: vec![],
            hyperparams: hp.clone(),
            schedule: schedule.copied(),
            cv_loss,
            cv_history: vec![cv_loss],
            trace: vec![(steps, cv_loss)],
            gradient_steps: steps,
        })
    }
}

pub fn accounting_check() -> Check {
    let a = gradient_steps(50, 5, 128, 1).map_err(|e| e.to_string())?;
    let b = gradient_steps(20, 5, 128, 2).map_err(|e| e.to_string())?;
    let grid = [1e-2, 1e-3, 1e-4, 1e-5, 1e-6];
    let space = SearchSpace::grid(grid.to_vec(), grid.to_vec()).map_err(|e| e.to_string())?;
    let per_model = gradient_steps(50, 1, 128, 1).map_err(|e| e.to_string())?;
    let formula = grid_search_steps(25, per_model).map_err(|e| e.to_string())?;
    let out = grid_search(&space, &CountingTrainer, per_model, 1).map_err(|e| e.to_string())?;
    let detail = format!(
        "population {a}, two-epoch {b}, grid formula {formula}, grid executed {} over {} trials",
        out.gradient_steps,
        out.trials.len()
    );
    if a == 32_000 && b == 25_600 && formula == 160_000 && out.gradient_steps == 160_000 && out.trials.len() == 25 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

// ---------------------------------------------------------------- samplers

pub const TAIL_TARGET: f64 = 0.159;
pub const TAIL_TOLERANCE: f64 = 0.005;
pub const SYMMETRY_TOLERANCE: f64 = 0.01;

pub fn mutation_distribution_check() -> Check {
    let (low, high) = log_symmetry_check(1.0, 10.0, 1_000_000, &mut substream(5, &[])).map_err(|e| e.to_string())?;
    let cfg = MutationConfig::default();
    let mut rng = substream(6, &[]);
    let mut logs: Vec<f64> = (0..100_000).map(|_| init_hyperparams(&cfg, &mut rng).learning_rate().log10()).collect();
    logs.sort_by(f64::total_cmp);
    let median = 0.5 * (logs[49_999] + logs[50_000]);
    let detail = format!("p_low {low:.5}, p_high {high:.5}, initial lr log10 median {median:.4}");
    let tails_ok = (low - TAIL_TARGET).abs() <= TAIL_TOLERANCE && (high - TAIL_TARGET).abs() <= TAIL_TOLERANCE;
    if (low - high).abs() < SYMMETRY_TOLERANCE && tails_ok && (-4.1..=-3.9).contains(&median) {
        Ok(detail)
    } else {
        Err(detail)
    }
}
