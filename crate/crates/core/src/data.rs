//! Labelled example matrices and the batch streams the engine draws from.

use rand::seq::index;
use rand::RngCore;

use crate::error::{Error, Result};

/// A row-major block of examples with integer class targets.
#[derive(Clone, Debug, PartialEq)]
pub struct Batch {
    inputs: Vec<f64>,
    features: usize,
    targets: Vec<usize>,
}

impl Batch {
    pub fn new(inputs: Vec<f64>, features: usize, targets: Vec<usize>) -> Result<Self> {
        if targets.is_empty() {
            return Err(Error::domain("batch must contain at least one example"));
        }
        if features == 0 || inputs.len() != features * targets.len() {
            return Err(Error::domain(format!(
                "batch has {} input values for {} targets of width {}",
                inputs.len(),
                targets.len(),
                features
            )));
        }
        Ok(Self {
            inputs,
            features,
            targets,
        })
    }

    pub fn size(&self) -> usize {
        self.targets.len()
    }

    pub fn features(&self) -> usize {
        self.features
    }

    pub fn inputs(&self) -> &[f64] {
        &self.inputs
    }

    pub fn targets(&self) -> &[usize] {
        &self.targets
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.inputs[i * self.features..(i + 1) * self.features]
    }
}

/// A labelled dataset (or one partition of it).
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    inputs: Vec<f64>,
    features: usize,
    labels: Vec<usize>,
    classes: usize,
}

impl Dataset {
    pub fn new(inputs: Vec<f64>, features: usize, labels: Vec<usize>, classes: usize) -> Result<Self> {
        if features == 0 || inputs.len() != features * labels.len() {
            return Err(Error::domain(format!(
                "dataset has {} input values for {} labels of width {}",
                inputs.len(),
                labels.len(),
                features
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= classes) {
            return Err(Error::domain(format!("label {bad} out of range for {classes} classes")));
        }
        Ok(Self {
            inputs,
            features,
            labels,
            classes,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn features(&self) -> usize {
        self.features
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn inputs(&self) -> &[f64] {
        &self.inputs
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.inputs[i * self.features..(i + 1) * self.features]
    }

    /// Copies the selected rows, in order, into a new dataset.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let mut inputs = Vec::with_capacity(indices.len() * self.features);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            inputs.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        Dataset {
            inputs,
            features: self.features,
            labels,
            classes: self.classes,
        }
    }

    pub fn batch(&self, indices: &[usize]) -> Result<Batch> {
        let sub = self.subset(indices);
        Batch::new(sub.inputs, sub.features, sub.labels)
    }

    /// The whole dataset as one batch.
    pub fn as_batch(&self) -> Result<Batch> {
        Batch::new(self.inputs.clone(), self.features, self.labels.clone())
    }

    /// Draws `size` distinct examples uniformly (all of them if `size`
    /// exceeds the dataset length).
    pub fn sample_batch(&self, size: usize, rng: &mut dyn RngCore) -> Result<Batch> {
        let size = size.min(self.len());
        let mut picked = index::sample(rng, self.len(), size).into_vec();
        picked.sort_unstable();
        self.batch(&picked)
    }
}

/// A distribution over batches.
pub trait BatchSource: Sync {
    fn sample(&self, rng: &mut dyn RngCore) -> Result<Batch>;
}

/// Uniform minibatches without replacement from a fixed partition.
#[derive(Clone, Copy, Debug)]
pub struct SampledStream<'a> {
    pub data: &'a Dataset,
    pub batch_size: usize,
}

impl<'a> SampledStream<'a> {
    pub fn new(data: &'a Dataset, batch_size: usize) -> Self {
        Self { data, batch_size }
    }
}

impl BatchSource for SampledStream<'_> {
    fn sample(&self, rng: &mut dyn RngCore) -> Result<Batch> {
        self.data.sample_batch(self.batch_size, rng)
    }
}

/// Always yields the same batch. Used for analytic objectives.
#[derive(Clone, Debug)]
pub struct FixedBatch(pub Batch);

impl FixedBatch {
    /// A one-example placeholder batch for models that ignore their data.
    pub fn placeholder() -> Self {
        FixedBatch(Batch::new(vec![0.0], 1, vec![0]).expect("valid placeholder batch"))
    }
}

impl BatchSource for FixedBatch {
    fn sample(&self, _rng: &mut dyn RngCore) -> Result<Batch> {
        Ok(self.0.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;

    #[test]
    fn batch_rejects_mismatched_rows() {
        assert!(Batch::new(vec![1.0, 2.0, 3.0], 2, vec![0, 1]).is_err());
        assert!(Batch::new(vec![], 2, vec![]).is_err());
        let b = Batch::new(vec![1.0, 2.0, 3.0, 4.0], 2, vec![0, 1]).unwrap();
        assert_eq!(b.size(), 2);
        assert_eq!(b.row(1), &[3.0, 4.0]);
    }

    #[test]
    fn sampled_batches_are_distinct_rows_and_seeded() {
        let data = Dataset::new((0..20).map(f64::from).collect(), 1, vec![0; 20], 1).unwrap();
        let stream = SampledStream::new(&data, 8);
        let a = stream.sample(&mut substream(1, &[0])).unwrap();
        let b = stream.sample(&mut substream(1, &[0])).unwrap();
        assert_eq!(a, b);
        let mut rows: Vec<i64> = a.inputs().iter().map(|&x| x as i64).collect();
        rows.dedup();
        assert_eq!(rows.len(), 8);
    }
}
