//! Differentiable models and the local-update rules applied to them.

mod mlp;
mod objective;
mod optim;

pub use mlp::{Activation, MlpSpec};
pub use objective::{analytic_objective, finite_diff_grad, AnalyticModel, Objective};
pub use optim::{
    adam_step, adam_update, local_update, sgd_step, sgd_update, AdamConfig, AdamState,
    LocalOptimizer, OptState,
};

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::data::Batch;
use crate::error::Result;

/// Loss split into its data and regularization terms.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossReport {
    pub data_loss: f64,
    pub reg_loss: f64,
    pub total: f64,
}

impl LossReport {
    pub fn new(data_loss: f64, reg_loss: f64) -> Self {
        Self {
            data_loss,
            reg_loss,
            total: data_loss + reg_loss,
        }
    }
}

/// Anything the engine can train: a flat parameter vector with a loss and
/// its gradient over a batch.
pub trait Model: Sync {
    fn param_count(&self) -> usize;

    fn init_params(&self, rng: &mut dyn RngCore) -> Vec<f64>;

    fn loss_and_grad(&self, theta: &[f64], batch: &Batch, reg_rate: f64) -> Result<(LossReport, Vec<f64>)>;

    fn loss(&self, theta: &[f64], batch: &Batch, reg_rate: f64) -> Result<LossReport> {
        Ok(self.loss_and_grad(theta, batch, reg_rate)?.0)
    }
}
