use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::localsearch::OptState;

pub const LEARNING_RATE: &str = "learning_rate";
pub const REGULARIZATION_RATE: &str = "regularization_rate";

/// Named, strictly positive hyper-parameters.
///
/// Iteration order is the key order, which keeps mutation draws stable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams(BTreeMap<String, f64>);

impl Hyperparams {
    pub fn new(learning_rate: f64, regularization_rate: f64) -> Result<Self> {
        let mut map = BTreeMap::new();
        map.insert(LEARNING_RATE.to_string(), learning_rate);
        map.insert(REGULARIZATION_RATE.to_string(), regularization_rate);
        Self::from_map(map)
    }

    pub fn from_map(map: BTreeMap<String, f64>) -> Result<Self> {
        for key in [LEARNING_RATE, REGULARIZATION_RATE] {
            if !map.contains_key(key) {
                return Err(Error::domain(format!("hyper-parameter `{key}` is required")));
            }
        }
        for (k, &v) in &map {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::domain(format!("hyper-parameter `{k}` = {v} must be positive and finite")));
            }
        }
        Ok(Self(map))
    }

    pub fn learning_rate(&self) -> f64 {
        self.0[LEARNING_RATE]
    }

    pub fn regularization_rate(&self) -> f64 {
        self.0[REGULARIZATION_RATE]
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.0.get(key).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.0.iter().map(|(k, &v)| (k.as_str(), v))
    }

    /// Replaces every value with `f(name, value)`. The caller guarantees
    /// the results stay positive and finite.
    pub(crate) fn map_values(&mut self, mut f: impl FnMut(&str, f64) -> f64) {
        for (k, v) in self.0.iter_mut() {
            *v = f(k, *v);
        }
    }
}

/// One candidate: model parameters, hyper-parameters and the local
/// optimizer's state.
#[derive(Clone, Debug, PartialEq)]
pub struct Individual {
    pub id: usize,
    pub theta: Vec<f64>,
    pub alpha: Hyperparams,
    pub opt_state: OptState,
}

impl Individual {
    pub fn new(id: usize, theta: Vec<f64>, alpha: Hyperparams, opt_state: OptState) -> Result<Self> {
        if theta.iter().any(|x| !x.is_finite()) {
            return Err(Error::numerical(format!("individual {id}"), "theta contains non-finite values"));
        }
        Ok(Self {
            id,
            theta,
            alpha,
            opt_state,
        })
    }

    pub fn learning_rate(&self) -> f64 {
        self.alpha.learning_rate()
    }

    pub fn regularization_rate(&self) -> f64 {
        self.alpha.regularization_rate()
    }

    /// Bitwise equality of every field, treating `-0.0` and `0.0` (and NaN
    /// payloads) as distinct.
    pub fn bit_identical(&self, other: &Individual) -> bool {
        fn same(a: &[f64], b: &[f64]) -> bool {
            a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
        }
        let alpha_same = self.alpha.0.len() == other.alpha.0.len()
            && self
                .alpha
                .0
                .iter()
                .zip(other.alpha.0.iter())
                .all(|((ka, va), (kb, vb))| ka == kb && va.to_bits() == vb.to_bits());
        let state_same = match (&self.opt_state, &other.opt_state) {
            (OptState::Sgd, OptState::Sgd) => true,
            (OptState::Adam(a), OptState::Adam(b)) => {
                a.step == b.step && same(&a.first_moment, &b.first_moment) && same(&a.second_moment, &b.second_moment)
            }
            _ => false,
        };
        self.id == other.id && same(&self.theta, &other.theta) && alpha_same && state_same
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hyperparams_require_positive_finite_values() {
        assert!(Hyperparams::new(0.001, 0.001).is_ok());
        assert!(Hyperparams::new(0.0, 0.001).is_err());
        assert!(Hyperparams::new(0.001, f64::NAN).is_err());
        assert!(Hyperparams::from_map(BTreeMap::from([(LEARNING_RATE.to_string(), 1.0)])).is_err());
    }

    #[test]
    fn bit_identity_distinguishes_signed_zero() {
        let hp = Hyperparams::new(0.1, 0.1).unwrap();
        let a = Individual::new(0, vec![0.0], hp.clone(), OptState::Sgd).unwrap();
        let b = Individual::new(0, vec![-0.0], hp, OptState::Sgd).unwrap();
        assert_eq!(a, b);
        assert!(!a.bit_identical(&b));
        assert!(a.bit_identical(&a.clone()));
    }
}
