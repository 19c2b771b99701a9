use std::collections::BTreeSet;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use super::{LossReport, Model};
use crate::data::Batch;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Tanh,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
        }
    }

    /// Derivative expressed through the activation's output.
    fn derivative_from_output(self, a: f64) -> f64 {
        match self {
            Activation::Relu => {
                if a > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - a * a,
        }
    }
}

/// Fully connected classifier with softmax cross-entropy loss.
///
/// Parameters are laid out layer by layer: the `in × out` kernel in
/// row-major order, then the `out` biases. L2 regularization applies to the
/// kernels of the layers listed in `regularized` (biases are never
/// penalised).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MlpSpec {
    widths: Vec<usize>,
    activations: Vec<Activation>,
    regularized: BTreeSet<usize>,
}

impl MlpSpec {
    pub fn new(widths: Vec<usize>, activations: Vec<Activation>, regularized: BTreeSet<usize>) -> Result<Self> {
        if widths.len() < 2 {
            return Err(Error::domain("an MLP needs at least an input and an output layer"));
        }
        if widths.contains(&0) {
            return Err(Error::domain("layer widths must be positive"));
        }
        if widths[widths.len() - 1] < 2 {
            return Err(Error::domain("output width is the class count and must be at least 2"));
        }
        let layers = widths.len() - 1;
        if activations.len() != layers - 1 {
            return Err(Error::domain(format!(
                "{} hidden layers need {} activations, got {}",
                layers - 1,
                layers - 1,
                activations.len()
            )));
        }
        if let Some(&bad) = regularized.iter().find(|&&l| l >= layers) {
            return Err(Error::domain(format!("regularized layer {bad} does not exist ({layers} layers)")));
        }
        Ok(Self {
            widths,
            activations,
            regularized,
        })
    }

    /// ReLU on every hidden layer.
    pub fn relu(widths: Vec<usize>, regularized: impl IntoIterator<Item = usize>) -> Result<Self> {
        let hidden = widths.len().saturating_sub(2);
        Self::new(widths, vec![Activation::Relu; hidden], regularized.into_iter().collect())
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn regularized(&self) -> &BTreeSet<usize> {
        &self.regularized
    }

    /// Number of weight layers.
    pub fn layers(&self) -> usize {
        self.widths.len() - 1
    }

    pub fn classes(&self) -> usize {
        self.widths[self.widths.len() - 1]
    }

    /// Same architecture with a different regularized-layer set.
    pub fn with_regularized(&self, regularized: impl IntoIterator<Item = usize>) -> Result<Self> {
        Self::new(self.widths.clone(), self.activations.clone(), regularized.into_iter().collect())
    }

    /// Offsets of (kernel, bias) for layer `l`.
    fn offsets(&self, l: usize) -> (usize, usize) {
        let mut off = 0;
        for k in 0..l {
            off += (self.widths[k] + 1) * self.widths[k + 1];
        }
        (off, off + self.widths[l] * self.widths[l + 1])
    }

    fn check_inputs(&self, theta: &[f64], batch: &Batch) -> Result<()> {
        if theta.len() != self.param_count() {
            return Err(Error::domain(format!(
                "theta has {} entries, architecture needs {}",
                theta.len(),
                self.param_count()
            )));
        }
        if batch.features() != self.widths[0] {
            return Err(Error::domain(format!(
                "batch has {} features, network input width is {}",
                batch.features(),
                self.widths[0]
            )));
        }
        if let Some(&t) = batch.targets().iter().find(|&&t| t >= self.classes()) {
            return Err(Error::domain(format!("target {t} out of range for {} classes", self.classes())));
        }
        Ok(())
    }

    /// Post-activation outputs of every hidden layer, then the logits.
    fn forward(&self, theta: &[f64], batch: &Batch) -> Result<Vec<Vec<f64>>> {
        let rows = batch.size();
        let mut outputs: Vec<Vec<f64>> = Vec::with_capacity(self.layers());
        for l in 0..self.layers() {
            let input: &[f64] = if l == 0 { batch.inputs() } else { &outputs[l - 1] };
            let (n_in, n_out) = (self.widths[l], self.widths[l + 1]);
            let (w_off, b_off) = self.offsets(l);
            let kernel = &theta[w_off..b_off];
            let bias = &theta[b_off..b_off + n_out];
            let mut z = Vec::with_capacity(rows * n_out);
            for r in 0..rows {
                z.extend_from_slice(bias);
                let zr = &mut z[r * n_out..(r + 1) * n_out];
                for (i, &a) in input[r * n_in..(r + 1) * n_in].iter().enumerate() {
                    if a == 0.0 {
                        continue;
                    }
                    for (zj, &w) in zr.iter_mut().zip(&kernel[i * n_out..(i + 1) * n_out]) {
                        *zj += a * w;
                    }
                }
            }
            if l + 1 < self.layers() {
                let act = self.activations[l];
                z.iter_mut().for_each(|v| *v = act.apply(*v));
            }
            if z.iter().any(|v| !v.is_finite()) {
                return Err(Error::numerical(format!("layer {l}"), "non-finite activation"));
            }
            outputs.push(z);
        }
        Ok(outputs)
    }

    fn reg_loss(&self, theta: &[f64], reg_rate: f64) -> f64 {
        if reg_rate == 0.0 {
            return 0.0;
        }
        let sum_sq: f64 = self
            .regularized
            .iter()
            .map(|&l| {
                let (w_off, b_off) = self.offsets(l);
                theta[w_off..b_off].iter().map(|w| w * w).sum::<f64>()
            })
            .sum();
        reg_rate * sum_sq
    }

    /// Mean softmax cross-entropy of `logits` against `targets`; fills
    /// `probs` with the softmax when provided.
    fn cross_entropy(&self, logits: &[f64], targets: &[usize], mut probs: Option<&mut Vec<f64>>) -> f64 {
        let k = self.classes();
        let mut total = 0.0;
        for (r, &t) in targets.iter().enumerate() {
            let row = &logits[r * k..(r + 1) * k];
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = max + row.iter().map(|z| (z - max).exp()).sum::<f64>().ln();
            total += lse - row[t];
            if let Some(p) = probs.as_deref_mut() {
                p.extend(row.iter().map(|z| (z - lse).exp()));
            }
        }
        total / targets.len() as f64
    }

    /// Mean cross-entropy plus the L2 term, and the full gradient, from one
    /// forward and one backward pass.
    pub fn loss_and_grad(&self, theta: &[f64], batch: &Batch, reg_rate: f64) -> Result<(LossReport, Vec<f64>)> {
        self.check_inputs(theta, batch)?;
        let rows = batch.size();
        let outputs = self.forward(theta, batch)?;
        let logits = &outputs[self.layers() - 1];
        let mut probs = Vec::with_capacity(logits.len());
        let data_loss = self.cross_entropy(logits, batch.targets(), Some(&mut probs));
        let report = LossReport::new(data_loss, self.reg_loss(theta, reg_rate));
        if !report.total.is_finite() {
            return Err(Error::numerical("loss", format!("non-finite loss {}", report.total)));
        }

        let k = self.classes();
        let scale = 1.0 / rows as f64;
        let mut delta = probs;
        for (r, &t) in batch.targets().iter().enumerate() {
            delta[r * k + t] -= 1.0;
        }
        delta.iter_mut().for_each(|d| *d *= scale);

        let mut grad = vec![0.0; theta.len()];
        for l in (0..self.layers()).rev() {
            let input: &[f64] = if l == 0 { batch.inputs() } else { &outputs[l - 1] };
            let (n_in, n_out) = (self.widths[l], self.widths[l + 1]);
            let (w_off, b_off) = self.offsets(l);
            {
                let (g_kernel, g_rest) = grad[w_off..].split_at_mut(b_off - w_off);
                let g_bias = &mut g_rest[..n_out];
                for r in 0..rows {
                    let d = &delta[r * n_out..(r + 1) * n_out];
                    for (gb, &dj) in g_bias.iter_mut().zip(d) {
                        *gb += dj;
                    }
                    for (i, &a) in input[r * n_in..(r + 1) * n_in].iter().enumerate() {
                        if a == 0.0 {
                            continue;
                        }
                        for (g, &dj) in g_kernel[i * n_out..(i + 1) * n_out].iter_mut().zip(d) {
                            *g += a * dj;
                        }
                    }
                }
                if reg_rate != 0.0 && self.regularized.contains(&l) {
                    for (g, &w) in g_kernel.iter_mut().zip(&theta[w_off..b_off]) {
                        *g += 2.0 * reg_rate * w;
                    }
                }
            }
            if l == 0 {
                break;
            }
            let kernel = &theta[w_off..b_off];
            let act = self.activations[l - 1];
            let mut prev = vec![0.0; rows * n_in];
            for r in 0..rows {
                let d = &delta[r * n_out..(r + 1) * n_out];
                for i in 0..n_in {
                    let a = input[r * n_in + i];
                    let deriv = act.derivative_from_output(a);
                    if deriv == 0.0 {
                        continue;
                    }
                    let dot: f64 = kernel[i * n_out..(i + 1) * n_out].iter().zip(d).map(|(w, dj)| w * dj).sum();
                    prev[r * n_in + i] = dot * deriv;
                }
            }
            delta = prev;
        }
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::numerical("backward pass", "non-finite gradient"));
        }
        Ok((report, grad))
    }

    pub fn loss(&self, theta: &[f64], batch: &Batch, reg_rate: f64) -> Result<LossReport> {
        self.check_inputs(theta, batch)?;
        let outputs = self.forward(theta, batch)?;
        let data_loss = self.cross_entropy(&outputs[self.layers() - 1], batch.targets(), None);
        let report = LossReport::new(data_loss, self.reg_loss(theta, reg_rate));
        if !report.total.is_finite() {
            return Err(Error::numerical("loss", format!("non-finite loss {}", report.total)));
        }
        Ok(report)
    }

    /// Fraction of examples whose arg-max logit equals the target.
    pub fn accuracy(&self, theta: &[f64], batch: &Batch) -> Result<f64> {
        self.check_inputs(theta, batch)?;
        let outputs = self.forward(theta, batch)?;
        let logits = &outputs[self.layers() - 1];
        let k = self.classes();
        let correct = batch
            .targets()
            .iter()
            .enumerate()
            .filter(|&(r, &t)| {
                let row = &logits[r * k..(r + 1) * k];
                let best = (0..k).fold(0, |b, j| if row[j] > row[b] { j } else { b });
                best == t
            })
            .count();
        Ok(correct as f64 / batch.size() as f64)
    }
}

impl Model for MlpSpec {
    fn param_count(&self) -> usize {
        (0..self.layers()).map(|l| (self.widths[l] + 1) * self.widths[l + 1]).sum()
    }

    /// Glorot-uniform kernels, zero biases.
    fn init_params(&self, rng: &mut dyn RngCore) -> Vec<f64> {
        let mut theta = vec![0.0; self.param_count()];
        for l in 0..self.layers() {
            let (w_off, b_off) = self.offsets(l);
            let limit = (6.0 / (self.widths[l] + self.widths[l + 1]) as f64).sqrt();
            for w in &mut theta[w_off..b_off] {
                *w = rng.random_range(-limit..limit);
            }
        }
        theta
    }

    fn loss_and_grad(&self, theta: &[f64], batch: &Batch, reg_rate: f64) -> Result<(LossReport, Vec<f64>)> {
        MlpSpec::loss_and_grad(self, theta, batch, reg_rate)
    }

    fn loss(&self, theta: &[f64], batch: &Batch, reg_rate: f64) -> Result<LossReport> {
        MlpSpec::loss(self, theta, batch, reg_rate)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;

    fn toy_batch() -> Batch {
        Batch::new(vec![0.5, -1.0, 2.0, 0.25], 2, vec![0, 1]).unwrap()
    }

    #[test]
    fn validates_architecture() {
        assert!(MlpSpec::relu(vec![4], []).is_err());
        assert!(MlpSpec::relu(vec![4, 1], []).is_err());
        assert!(MlpSpec::relu(vec![4, 8, 3], [2]).is_err());
        assert!(MlpSpec::new(vec![4, 8, 3], vec![], BTreeSet::new()).is_err());
        let spec = MlpSpec::relu(vec![784, 128, 10], [0]).unwrap();
        assert_eq!(spec.param_count(), 785 * 128 + 129 * 10);
    }

    #[test]
    fn equal_logits_give_ln2() {
        let spec = MlpSpec::relu(vec![2, 3, 2], []).unwrap();
        let theta = vec![0.0; spec.param_count()];
        let report = spec.loss(&theta, &toy_batch(), 0.0).unwrap();
        assert!((report.data_loss - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn zero_reg_rate_has_zero_penalty() {
        let spec = MlpSpec::relu(vec![2, 3, 2], [0, 1]).unwrap();
        let theta = spec.init_params(&mut substream(4, &[]));
        let (report, _) = spec.loss_and_grad(&theta, &toy_batch(), 0.0).unwrap();
        assert_eq!(report.reg_loss, 0.0);
        assert_eq!(report.total, report.data_loss + report.reg_loss);
    }

    #[test]
    fn penalty_covers_only_listed_kernels() {
        let spec = MlpSpec::relu(vec![2, 3, 2], [1]).unwrap();
        let theta: Vec<f64> = (0..spec.param_count()).map(|i| i as f64 * 0.01).collect();
        let (w_off, b_off) = spec.offsets(1);
        let expected: f64 = theta[w_off..b_off].iter().map(|w| w * w).sum::<f64>() * 0.5;
        let report = spec.loss(&theta, &toy_batch(), 0.5).unwrap();
        assert_eq!(report.reg_loss, expected);
    }

    #[test]
    fn rejects_wrong_theta_length_and_targets() {
        let spec = MlpSpec::relu(vec![2, 3, 2], []).unwrap();
        assert!(spec.loss(&[0.0; 3], &toy_batch(), 0.0).is_err());
        let bad = Batch::new(vec![0.0, 0.0], 2, vec![5]).unwrap();
        assert!(spec.loss(&vec![0.0; spec.param_count()], &bad, 0.0).is_err());
    }

    #[test]
    fn overflowing_activations_name_the_layer() {
        let spec = MlpSpec::relu(vec![2, 3, 2], []).unwrap();
        let theta = vec![1e300; spec.param_count()];
        let batch = Batch::new(vec![1e300, 1e300], 2, vec![0]).unwrap();
        match spec.loss(&theta, &batch, 0.0) {
            Err(Error::Numerical { context, .. }) => assert_eq!(context, "layer 0"),
            other => panic!("expected numerical error, got {other:?}"),
        }
    }
}
