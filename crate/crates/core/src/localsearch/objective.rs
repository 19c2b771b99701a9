use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use super::{LossReport, Model};
use crate::data::Batch;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Objective {
    Sphere,
    Rosenbrock,
}

/// Value and exact gradient of a closed-form test function.
///
/// Rosenbrock uses a = 1, b = 100: Σ 100(x_{i+1} − x_i²)² + (1 − x_i)².
pub fn analytic_objective(objective: Objective, x: &[f64]) -> Result<(f64, Vec<f64>)> {
    match objective {
        Objective::Sphere => {
            if x.is_empty() {
                return Err(Error::domain("sphere needs at least one coordinate"));
            }
            Ok((x.iter().map(|v| v * v).sum(), x.iter().map(|v| 2.0 * v).collect()))
        }
        Objective::Rosenbrock => {
            if x.len() < 2 {
                return Err(Error::domain(format!("rosenbrock needs dimension >= 2, got {}", x.len())));
            }
            let mut value = 0.0;
            let mut grad = vec![0.0; x.len()];
            for i in 0..x.len() - 1 {
                let a = x[i + 1] - x[i] * x[i];
                let b = 1.0 - x[i];
                value += 100.0 * a * a + b * b;
                grad[i] += -400.0 * x[i] * a - 2.0 * b;
                grad[i + 1] += 200.0 * a;
            }
            Ok((value, grad))
        }
    }
}

/// Central-difference gradient `(f(x + h e_i) − f(x − h e_i)) / 2h`.
pub fn finite_diff_grad(mut f: impl FnMut(&[f64]) -> f64, x: &[f64], h: f64) -> Result<Vec<f64>> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::domain(format!("step h = {h} must be positive")));
    }
    let mut probe = x.to_vec();
    let mut grad = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let orig = probe[i];
        probe[i] = orig + h;
        let up = f(&probe);
        probe[i] = orig - h;
        let down = f(&probe);
        probe[i] = orig;
        if !(up.is_finite() && down.is_finite()) {
            return Err(Error::numerical(format!("coordinate {i}"), "non-finite function value"));
        }
        grad.push((up - down) / (2.0 * h));
    }
    Ok(grad)
}

/// An analytic objective exposed through the [`Model`] interface. Batches
/// and the regularization rate are ignored.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnalyticModel {
    pub objective: Objective,
    pub dim: usize,
    /// Half-width of the uniform initialization box.
    pub init_range: f64,
}

impl AnalyticModel {
    pub fn new(objective: Objective, dim: usize) -> Self {
        Self {
            objective,
            dim,
            init_range: 2.0,
        }
    }
}

impl Model for AnalyticModel {
    fn param_count(&self) -> usize {
        self.dim
    }

    fn init_params(&self, rng: &mut dyn RngCore) -> Vec<f64> {
        (0..self.dim)
            .map(|_| rng.random_range(-self.init_range..self.init_range))
            .collect()
    }

    fn loss_and_grad(&self, theta: &[f64], _batch: &Batch, _reg_rate: f64) -> Result<(LossReport, Vec<f64>)> {
        if theta.len() != self.dim {
            return Err(Error::domain(format!("expected {} parameters, got {}", self.dim, theta.len())));
        }
        let (value, grad) = analytic_objective(self.objective, theta)?;
        if !value.is_finite() {
            return Err(Error::numerical("objective", "non-finite value"));
        }
        Ok((LossReport::new(value, 0.0), grad))
    }
}
