//! Fitness-scaled mutation and hyper-parameter initialization.
//!
//! A mutation of strength `magnitude ∈ [0, 1]` adds Gaussian noise with
//! standard deviation `beta1 · magnitude` to every weight and multiplies each
//! hyper-parameter by `base^N(0, beta2 · magnitude)`. The multiplicative
//! noise is symmetric in log space, so halving and doubling a learning rate
//! are equally likely.

use rand::{Rng, RngCore};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::individual::{Hyperparams, Individual, LEARNING_RATE, REGULARIZATION_RATE};

/// `base^N(mean, sd)`
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogInit {
    pub mean: f64,
    pub sd: f64,
    pub base: f64,
}

impl LogInit {
    pub fn sample(&self, rng: &mut dyn RngCore) -> f64 {
        let z: f64 = StandardNormal.sample(rng);
        self.base.powf(self.mean + self.sd * z)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MutationConfig {
    /// Weight-noise standard deviation at magnitude 1.
    pub beta1: f64,
    /// Standard deviation of the hyper-parameter exponent at magnitude 1.
    pub beta2: f64,
    /// Base of the multiplicative hyper-parameter noise.
    pub base: f64,
    pub lr_init: LogInit,
    pub reg_init: LogInit,
    /// Mutated hyper-parameters are clamped into `[alpha_min, alpha_max]`.
    pub alpha_min: f64,
    pub alpha_max: f64,
}

impl Default for MutationConfig {
    fn default() -> Self {
        Self {
            beta1: 0.01,
            beta2: 15.0,
            base: 2.0,
            lr_init: LogInit {
                mean: -4.0,
                sd: 2.0,
                base: 10.0,
            },
            reg_init: LogInit {
                mean: 0.0,
                sd: 2.0,
                base: 10.0,
            },
            alpha_min: 1e-12,
            alpha_max: 1e6,
        }
    }
}

impl MutationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta1 >= 0.0 && self.beta1.is_finite()) {
            return Err(Error::domain(format!("beta1 = {} must be >= 0", self.beta1)));
        }
        if !(self.beta2 >= 0.0 && self.beta2.is_finite()) {
            return Err(Error::domain(format!("beta2 = {} must be >= 0", self.beta2)));
        }
        if !(self.base > 1.0 && self.base.is_finite()) {
            return Err(Error::domain(format!("base = {} must be > 1", self.base)));
        }
        if !(self.alpha_min > 0.0 && self.alpha_min < self.alpha_max && self.alpha_max.is_finite()) {
            return Err(Error::domain("hyper-parameter clamp range must satisfy 0 < min < max < inf"));
        }
        Ok(())
    }
}

/// A mutated copy and the number of hyper-parameters that had to be clamped.
#[derive(Clone, Debug, PartialEq)]
pub struct Mutated {
    pub individual: Individual,
    pub clamped: usize,
}

/// Mutates a copy of `individual`. The id and optimizer state are carried
/// over unchanged. At magnitude 0 the copy is bit-identical to the input.
pub fn mutate_counted(
    individual: &Individual,
    magnitude: f64,
    config: &MutationConfig,
    rng: &mut dyn RngCore,
) -> Result<Mutated> {
    if !(0.0..=1.0).contains(&magnitude) {
        return Err(Error::domain(format!("mutation magnitude {magnitude} outside [0, 1]")));
    }
    let mut out = individual.clone();
    if magnitude == 0.0 {
        return Ok(Mutated {
            individual: out,
            clamped: 0,
        });
    }
    let theta_sd = config.beta1 * magnitude;
    for w in out.theta.iter_mut() {
        let z: f64 = StandardNormal.sample(rng);
        *w += theta_sd * z;
    }
    let exponent_sd = config.beta2 * magnitude;
    let ln_base = config.base.ln();
    let mut clamped = 0;
    out.alpha.map_values(|_, v| {
        let z: f64 = StandardNormal.sample(rng);
        let proposed = v * (ln_base * exponent_sd * z).exp();
        let bounded = if proposed.is_nan() {
            v
        } else {
            proposed.clamp(config.alpha_min, config.alpha_max)
        };
        if bounded != proposed {
            clamped += 1;
        }
        bounded
    });
    if out.theta.iter().any(|w| !w.is_finite()) {
        return Err(Error::numerical(format!("mutation of individual {}", out.id), "non-finite weight"));
    }
    Ok(Mutated {
        individual: out,
        clamped,
    })
}

pub fn mutate(individual: &Individual, magnitude: f64, config: &MutationConfig, rng: &mut dyn RngCore) -> Result<Individual> {
    mutate_counted(individual, magnitude, config, rng).map(|m| m.individual)
}

/// Random starting hyper-parameters: learning rate `10^N(−4, 2)` and
/// regularization rate `10^N(0, 2)` under the default configuration.
pub fn init_hyperparams(config: &MutationConfig, rng: &mut dyn RngCore) -> Hyperparams {
    let lr = config.lr_init.sample(rng);
    let reg = config.reg_init.sample(rng);
    let map = [(LEARNING_RATE.to_string(), lr), (REGULARIZATION_RATE.to_string(), reg)]
        .into_iter()
        .collect();
    Hyperparams::from_map(map).expect("powers of a base > 1 are positive")
}

/// Empirical probabilities that a factor `base^N(0, sigma)` falls below
/// `1/base` and above `base`.
pub fn log_symmetry_check(sigma: f64, base: f64, n: usize, rng: &mut dyn RngCore) -> Result<(f64, f64)> {
    if n == 0 {
        return Err(Error::domain("log_symmetry_check needs at least one draw"));
    }
    if !(base > 1.0) || !(sigma >= 0.0) {
        return Err(Error::domain("log_symmetry_check needs base > 1 and sigma >= 0"));
    }
    let (lo, hi) = (1.0 / base, base);
    let ln_base = base.ln();
    let (mut below, mut above) = (0usize, 0usize);
    for _ in 0..n {
        let z: f64 = StandardNormal.sample(rng);
        let factor = (ln_base * sigma * z).exp();
        if factor < lo {
            below += 1;
        } else if factor > hi {
            above += 1;
        }
    }
    Ok((below as f64 / n as f64, above as f64 / n as f64))
}

/// Uniform draw in `[low, high)` on a log scale.
pub fn log_uniform(low: f64, high: f64, rng: &mut dyn RngCore) -> f64 {
    let (a, b) = (low.ln(), high.ln());
    (a + (b - a) * rng.random::<f64>()).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::localsearch::{AdamState, OptState};
    use crate::rng::substream;

    fn member() -> Individual {
        Individual::new(
            3,
            vec![0.5, -0.0, 1e-3],
            Hyperparams::new(0.001, 0.01).unwrap(),
            OptState::Adam(AdamState::new(3)),
        )
        .unwrap()
    }

    #[test]
    fn zero_magnitude_is_identity() {
        let m = member();
        let out = mutate(&m, 0.0, &MutationConfig::default(), &mut substream(1, &[])).unwrap();
        assert!(out.bit_identical(&m));
    }

    #[test]
    fn magnitude_outside_unit_interval_is_rejected() {
        let cfg = MutationConfig::default();
        for bad in [-0.1, 1.01, f64::NAN] {
            assert!(mutate(&member(), bad, &cfg, &mut substream(1, &[])).is_err());
        }
    }

    #[test]
    fn keeps_id_and_optimizer_state() {
        let m = member();
        let out = mutate(&m, 1.0, &MutationConfig::default(), &mut substream(2, &[])).unwrap();
        assert_eq!(out.id, m.id);
        assert_eq!(out.opt_state, m.opt_state);
        assert_ne!(out.theta, m.theta);
    }

    #[test]
    fn extreme_noise_is_clamped_and_counted() {
        let cfg = MutationConfig {
            beta2: 5000.0,
            ..MutationConfig::default()
        };
        let mut rng = substream(9, &[]);
        let mut total = 0;
        for _ in 0..50 {
            let out = mutate_counted(&member(), 1.0, &cfg, &mut rng).unwrap();
            for (_, v) in out.individual.alpha.iter() {
                assert!((cfg.alpha_min..=cfg.alpha_max).contains(&v));
            }
            total += out.clamped;
        }
        assert!(total > 0);
    }

    #[test]
    fn degenerate_sigma_has_no_tails() {
        let (lo, hi) = log_symmetry_check(0.0, 10.0, 1000, &mut substream(0, &[])).unwrap();
        assert_eq!((lo, hi), (0.0, 0.0));
        assert!(log_symmetry_check(1.0, 10.0, 0, &mut substream(0, &[])).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(MutationConfig::default().validate().is_ok());
        assert!(MutationConfig { base: 1.0, ..Default::default() }.validate().is_err());
        assert!(MutationConfig { beta1: -1.0, ..Default::default() }.validate().is_err());
    }

    #[test]
    fn init_draws_are_positive() {
        let mut rng = substream(5, &[]);
        for _ in 0..1000 {
            let hp = init_hyperparams(&MutationConfig::default(), &mut rng);
            assert!(hp.learning_rate() > 0.0 && hp.regularization_rate() > 0.0);
        }
    }
}
