use serde::{Deserialize, Serialize};

use super::{LossReport, Model};
use crate::data::Batch;
use crate::error::{Error, Result};
use crate::individual::Individual;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// First/second moment accumulators and the step counter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub first_moment: Vec<f64>,
    pub second_moment: Vec<f64>,
    pub step: u64,
}

impl AdamState {
    pub fn new(len: usize) -> Self {
        Self {
            first_moment: vec![0.0; len],
            second_moment: vec![0.0; len],
            step: 0,
        }
    }
}

/// Per-individual optimizer state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum OptState {
    Sgd,
    Adam(AdamState),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum LocalOptimizer {
    Sgd,
    Adam(AdamConfig),
}

impl LocalOptimizer {
    pub fn fresh_state(&self, len: usize) -> OptState {
        match self {
            LocalOptimizer::Sgd => OptState::Sgd,
            LocalOptimizer::Adam(_) => OptState::Adam(AdamState::new(len)),
        }
    }

    /// One update of `theta` with gradient `grad` at learning rate `lr`.
    pub fn apply(&self, theta: &mut [f64], state: &mut OptState, lr: f64, grad: &[f64]) -> Result<()> {
        match (self, state) {
            (LocalOptimizer::Sgd, OptState::Sgd) => sgd_update(theta, lr, grad),
            (LocalOptimizer::Adam(cfg), OptState::Adam(st)) => adam_update(theta, st, cfg, lr, grad),
            _ => Err(Error::domain("optimizer state does not match the configured optimizer")),
        }
    }
}

fn check_grad(theta: &[f64], grad: &[f64]) -> Result<()> {
    if grad.len() != theta.len() {
        return Err(Error::domain(format!(
            "gradient has {} entries, theta has {}",
            grad.len(),
            theta.len()
        )));
    }
    if grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::numerical("gradient", "non-finite gradient entry"));
    }
    Ok(())
}

fn check_theta(theta: &[f64]) -> Result<()> {
    if theta.iter().any(|x| !x.is_finite()) {
        return Err(Error::numerical("update", "theta became non-finite"));
    }
    Ok(())
}

/// `theta -= lr * grad`
pub fn sgd_update(theta: &mut [f64], lr: f64, grad: &[f64]) -> Result<()> {
    check_grad(theta, grad)?;
    for (t, g) in theta.iter_mut().zip(grad) {
        *t -= lr * g;
    }
    check_theta(theta)
}

pub fn adam_update(theta: &mut [f64], state: &mut AdamState, cfg: &AdamConfig, lr: f64, grad: &[f64]) -> Result<()> {
    check_grad(theta, grad)?;
    if state.first_moment.len() != theta.len() || state.second_moment.len() != theta.len() {
        return Err(Error::domain("Adam moment vectors do not match theta"));
    }
    state.step += 1;
    let t = state.step as f64;
    let bias1 = 1.0 - cfg.beta1.powf(t);
    let bias2 = 1.0 - cfg.beta2.powf(t);
    for (((x, m), v), &g) in theta
        .iter_mut()
        .zip(state.first_moment.iter_mut())
        .zip(state.second_moment.iter_mut())
        .zip(grad)
    {
        *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g;
        *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
        let m_hat = *m / bias1;
        let v_hat = *v / bias2;
        *x -= lr * m_hat / (v_hat.sqrt() + cfg.epsilon);
    }
    check_theta(theta)
}

/// Plain gradient descent step using the individual's learning rate.
pub fn sgd_step(individual: &Individual, grad: &[f64]) -> Result<Individual> {
    let mut next = individual.clone();
    sgd_update(&mut next.theta, individual.learning_rate(), grad)?;
    Ok(next)
}

pub fn adam_step(
    individual: &Individual,
    state: &AdamState,
    cfg: &AdamConfig,
    grad: &[f64],
) -> Result<(Individual, AdamState)> {
    let mut next = individual.clone();
    let mut state = state.clone();
    adam_update(&mut next.theta, &mut state, cfg, individual.learning_rate(), grad)?;
    Ok((next, state))
}

/// Trains `individual` in place on every batch in order, `epochs` times.
/// Hyper-parameters are left untouched. Returns the loss reported by the
/// last step and the number of gradient steps taken.
pub fn local_update(
    model: &dyn Model,
    optimizer: &LocalOptimizer,
    individual: &mut Individual,
    batches: &[Batch],
    epochs: usize,
) -> Result<(Option<LossReport>, u64)> {
    let lr = individual.learning_rate();
    let reg = individual.regularization_rate();
    let mut last = None;
    let mut steps = 0;
    for _ in 0..epochs {
        for batch in batches {
            let (report, grad) = model.loss_and_grad(&individual.theta, batch, reg)?;
            optimizer.apply(&mut individual.theta, &mut individual.opt_state, lr, &grad)?;
            last = Some(report);
            steps += 1;
        }
    }
    Ok((last, steps))
}
