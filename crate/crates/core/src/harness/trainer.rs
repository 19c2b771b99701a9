use rand::seq::SliceRandom;

use crate::baselines::{early_stop, schedule_lr, ScheduleSpec, TrainOutcome, TrainPlan, Trainer};
use crate::data::{Batch, Dataset};
use crate::error::Result;
use crate::individual::Hyperparams;
use crate::localsearch::{LocalOptimizer, MlpSpec, Model};
use crate::rng::{substream, tag};

/// Trains an MLP from scratch on the training partition, scoring on the
/// whole cross-validation partition. Never sees test data.
pub struct SupervisedTrainer<'a> {
    model: &'a MlpSpec,
    train: &'a Dataset,
    cv: Batch,
    optimizer: LocalOptimizer,
    batch_size: usize,
    /// Evaluation cadence (in steps) for [`TrainPlan::Steps`].
    eval_every: u64,
}

impl<'a> SupervisedTrainer<'a> {
    pub fn new(
        model: &'a MlpSpec,
        train: &'a Dataset,
        cv: &Dataset,
        optimizer: LocalOptimizer,
        batch_size: usize,
        eval_every: u64,
    ) -> Result<Self> {
        Ok(Self {
            model,
            train,
            cv: cv.as_batch()?,
            optimizer,
            batch_size: batch_size.max(1),
            eval_every: eval_every.max(1),
        })
    }

    fn cv_loss(&self, theta: &[f64], reg: f64) -> Result<f64> {
        Ok(self.model.loss(theta, &self.cv, reg)?.total)
    }
}

impl Trainer for SupervisedTrainer<'_> {
    fn steps_per_epoch(&self) -> u64 {
        self.train.len().div_ceil(self.batch_size) as u64
    }

    fn train(&self, hp: &Hyperparams, schedule: Option<&ScheduleSpec>, plan: TrainPlan, seed: u64) -> Result<TrainOutcome> {
        let mut theta = self.model.init_params(&mut substream(seed, &[tag::INIT]));
        let mut state = self.optimizer.fresh_state(theta.len());
        let reg = hp.regularization_rate();
        let lr_at = |step: u64| -> Result<f64> {
            match schedule {
                Some(s) => schedule_lr(s, step),
                None => Ok(hp.learning_rate()),
            }
        };
        let mut step = 0u64;
        let mut cv_history = Vec::new();
        let mut trace = Vec::new();
        let mut take_step = |theta: &mut Vec<f64>, batch: &Batch, step: &mut u64| -> Result<()> {
            let (_, grad) = self.model.loss_and_grad(theta, batch, reg)?;
            self.optimizer.apply(theta, &mut state, lr_at(*step)?, &grad)?;
            *step += 1;
            Ok(())
        };
        match plan {
            TrainPlan::Steps(total) => {
                let mut rng = substream(seed, &[tag::TRAIN]);
                while step < total {
                    let batch = self.train.sample_batch(self.batch_size, &mut rng)?;
                    take_step(&mut theta, &batch, &mut step)?;
                    if step.is_multiple_of(self.eval_every) || step == total {
                        let loss = self.cv_loss(&theta, reg)?;
                        cv_history.push(loss);
                        trace.push((step, loss));
                    }
                }
            }
            TrainPlan::Epochs { max_epochs, patience } => {
                let mut order: Vec<usize> = (0..self.train.len()).collect();
                for epoch in 0..max_epochs {
                    order.shuffle(&mut substream(seed, &[tag::TRAIN, epoch as u64]));
                    for chunk in order.chunks(self.batch_size) {
                        let batch = self.train.batch(chunk)?;
                        take_step(&mut theta, &batch, &mut step)?;
                    }
                    let loss = self.cv_loss(&theta, reg)?;
                    cv_history.push(loss);
                    trace.push((step, loss));
                    if patience.is_some_and(|p| early_stop(&cv_history, p)) {
                        break;
                    }
                }
            }
        }
        let cv_loss = match cv_history.last() {
            Some(&l) => l,
            None => self.cv_loss(&theta, reg)?,
        };
        Ok(TrainOutcome {
            theta,
            hyperparams: hp.clone(),
            schedule: schedule.copied(),
            cv_loss,
            cv_history,
            trace,
            gradient_steps: step,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::synthetic::{make_synthetic, SyntheticKind};
    use crate::localsearch::AdamConfig;

    #[test]
    fn step_plans_take_exact_step_counts_and_learn() {
        let data = make_synthetic(SyntheticKind::Blobs, 200, 0.5, &mut substream(1, &[])).unwrap();
        let model = MlpSpec::relu(vec![2, 8, 2], [0]).unwrap();
        let trainer =
            SupervisedTrainer::new(&model, &data, &data, LocalOptimizer::Adam(AdamConfig::default()), 32, 50).unwrap();
        let hp = Hyperparams::new(0.01, 1e-4).unwrap();
        let out = trainer.train(&hp, None, TrainPlan::Steps(300), 3).unwrap();
        assert_eq!(out.gradient_steps, 300);
        assert_eq!(out.trace.len(), 6);
        assert!(out.cv_loss < 0.2, "{}", out.cv_loss);

        let out = trainer
            .train(&hp, None, TrainPlan::Epochs { max_epochs: 3, patience: None }, 3)
            .unwrap();
        assert_eq!(trainer.steps_per_epoch(), 7);
        assert_eq!(out.gradient_steps, 21);
        assert_eq!(out.cv_history.len(), 3);
    }

    #[test]
    fn early_stopping_halts_before_the_epoch_cap() {
        let data = make_synthetic(SyntheticKind::TwoMoons, 200, 0.3, &mut substream(2, &[])).unwrap();
        let model = MlpSpec::relu(vec![2, 8, 2], []).unwrap();
        let trainer = SupervisedTrainer::new(&model, &data, &data, LocalOptimizer::Sgd, 50, 1).unwrap();
        // a learning rate far too large oscillates, so CV loss stalls quickly
        let hp = Hyperparams::new(50.0, 1e-3).unwrap();
        let out = trainer
            .train(&hp, None, TrainPlan::Epochs { max_epochs: 500, patience: Some(0) }, 1);
        match out {
            Ok(o) => assert!(o.cv_history.len() < 500),
            Err(e) => assert!(matches!(e, crate::Error::Numerical { .. }), "{e}"),
        }
    }
}
