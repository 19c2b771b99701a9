//! Gradient-step accounting: one step is one parameter update from one
//! minibatch, the hardware-independent unit of compute every method is
//! budgeted in.

use crate::error::{Error, Result};

/// `iterations × model_count × batches_per_iteration × epochs_per_iteration`
pub fn gradient_steps(
    iterations: u64,
    model_count: u64,
    batches_per_iteration: u64,
    epochs_per_iteration: u64,
) -> Result<u64> {
    let factors = [iterations, model_count, batches_per_iteration, epochs_per_iteration];
    if factors.contains(&0) {
        return Err(Error::domain(format!("gradient_steps factors must be >= 1, got {factors:?}")));
    }
    factors
        .iter()
        .try_fold(1u64, |acc, &f| acc.checked_mul(f))
        .ok_or_else(|| Error::domain("gradient step count overflows u64"))
}

/// Steps spent by grid search: one full budget per grid point.
pub fn grid_search_steps(grid_points: u64, budget_per_model: u64) -> Result<u64> {
    gradient_steps(grid_points, 1, budget_per_model, 1)
}

/// Steps spent by probe-then-train random search.
pub fn random_search_steps(trials: u64, probe_epochs: u64, full_epochs: u64, steps_per_epoch: u64) -> u64 {
    (trials * probe_epochs + full_epochs) * steps_per_epoch
}
