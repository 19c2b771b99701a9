//! Two-class 2-D datasets that need no download.

use std::f64::consts::PI;

use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SyntheticKind {
    /// Isotropic Gaussian clouds centred at (−2, 0) and (2, 0).
    Blobs,
    /// Interleaved half circles.
    TwoMoons,
}

/// `n` points, `n/2` of class 0 first and the rest class 1, with Gaussian
/// noise of standard deviation `noise` added to both coordinates.
pub fn make_synthetic(kind: SyntheticKind, n: usize, noise: f64, rng: &mut dyn RngCore) -> Result<Dataset> {
    if n < 4 {
        return Err(Error::domain(format!("synthetic datasets need n >= 4, got {n}")));
    }
    if !(noise >= 0.0 && noise.is_finite()) {
        return Err(Error::domain(format!("noise = {noise} must be >= 0")));
    }
    let per_class = [n / 2, n - n / 2];
    let mut inputs = Vec::with_capacity(2 * n);
    let mut labels = Vec::with_capacity(n);
    for (class, &count) in per_class.iter().enumerate() {
        for i in 0..count {
            let (x, y) = match kind {
                SyntheticKind::Blobs => (if class == 0 { -2.0 } else { 2.0 }, 0.0),
                SyntheticKind::TwoMoons => {
                    let t = if count > 1 { PI * i as f64 / (count - 1) as f64 } else { 0.0 };
                    if class == 0 {
                        (t.cos(), t.sin())
                    } else {
                        (1.0 - t.cos(), 0.5 - t.sin())
                    }
                }
            };
            let dx: f64 = StandardNormal.sample(rng);
            let dy: f64 = StandardNormal.sample(rng);
            inputs.push(x + noise * dx);
            inputs.push(y + noise * dy);
            labels.push(class);
        }
    }
    Dataset::new(inputs, 2, labels, 2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;

    #[test]
    fn balanced_and_seeded() {
        for kind in [SyntheticKind::Blobs, SyntheticKind::TwoMoons] {
            let a = make_synthetic(kind, 101, 0.1, &mut substream(1, &[])).unwrap();
            let b = make_synthetic(kind, 101, 0.1, &mut substream(1, &[])).unwrap();
            assert_eq!(a, b);
            let ones = a.labels().iter().filter(|&&l| l == 1).count();
            assert!(ones.abs_diff(101 - ones) <= 1);
        }
        let tiny = make_synthetic(SyntheticKind::TwoMoons, 4, 0.0, &mut substream(1, &[])).unwrap();
        assert_eq!(tiny.labels(), &[0, 0, 1, 1]);
        assert!(make_synthetic(SyntheticKind::Blobs, 3, 0.0, &mut substream(1, &[])).is_err());
    }

    #[test]
    fn noiseless_blobs_are_separated_by_x() {
        let d = make_synthetic(SyntheticKind::Blobs, 100, 0.0, &mut substream(2, &[])).unwrap();
        for i in 0..d.len() {
            assert_eq!(d.row(i)[0] > 0.0, d.labels()[i] == 1);
        }
    }
}
