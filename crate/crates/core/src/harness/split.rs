//! Train / cross-validation / test partitioning with a test-access guard.

use std::collections::BTreeMap;
use std::sync::Mutex;

use rand::seq::SliceRandom;
use rand::RngCore;

use crate::data::Dataset;
use crate::error::{Error, Result};

/// The held-out test partition. Each `(method, seed)` pair may evaluate on
/// it exactly once; any further access is refused and counted.
#[derive(Debug)]
pub struct TestPartition {
    data: Dataset,
    accesses: Mutex<BTreeMap<(String, u64), usize>>,
}

impl TestPartition {
    pub fn new(data: Dataset) -> Self {
        Self {
            data,
            accesses: Mutex::new(BTreeMap::new()),
        }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Runs `f` on the test data if this is the first access for
    /// `(method, seed)`.
    pub fn evaluate<T>(&self, method: &str, seed: u64, f: impl FnOnce(&Dataset) -> Result<T>) -> Result<T> {
        {
            let mut accesses = self.accesses.lock().expect("test guard poisoned");
            let count = accesses.entry((method.to_string(), seed)).or_insert(0);
            *count += 1;
            if *count > 1 {
                return Err(Error::TestAccess {
                    method: method.to_string(),
                    seed,
                });
            }
        }
        f(&self.data)
    }

    pub fn access_count(&self, method: &str, seed: u64) -> usize {
        let accesses = self.accesses.lock().expect("test guard poisoned");
        accesses.get(&(method.to_string(), seed)).copied().unwrap_or(0)
    }

    /// Every `(method, seed)` pair seen so far with its access count.
    pub fn access_log(&self) -> BTreeMap<(String, u64), usize> {
        self.accesses.lock().expect("test guard poisoned").clone()
    }
}

#[derive(Debug)]
pub struct DatasetSplit {
    pub train: Dataset,
    pub cv: Dataset,
    pub test: TestPartition,
}

impl DatasetSplit {
    /// Keeps only the first `max` training examples.
    pub fn cap_train(mut self, max: usize) -> Self {
        if self.train.len() > max {
            let keep: Vec<usize> = (0..max).collect();
            self.train = self.train.subset(&keep);
        }
        self
    }
}

/// Shuffles `dataset` and cuts it into train/cv/test partitions of
/// `round(n · fraction)` examples each.
pub fn split(dataset: &Dataset, fractions: (f64, f64, f64), rng: &mut dyn RngCore) -> Result<DatasetSplit> {
    let (ftrain, fcv, ftest) = fractions;
    for f in [ftrain, fcv, ftest] {
        if !(f > 0.0 && f.is_finite()) {
            return Err(Error::domain(format!("split fraction {f} must be positive")));
        }
    }
    if ftrain + fcv + ftest > 1.0 + 1e-9 {
        return Err(Error::domain(format!(
            "split fractions sum to {} > 1",
            ftrain + fcv + ftest
        )));
    }
    let n = dataset.len();
    let count = |f: f64| (n as f64 * f).round() as usize;
    let (ntrain, ncv, ntest) = (count(ftrain), count(fcv), count(ftest));
    if ntrain + ncv + ntest > n || ntrain == 0 || ncv == 0 || ntest == 0 {
        return Err(Error::domain(format!(
            "cannot split {n} examples into {ntrain}/{ncv}/{ntest}"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    Ok(DatasetSplit {
        train: dataset.subset(&order[..ntrain]),
        cv: dataset.subset(&order[ntrain..ntrain + ncv]),
        test: TestPartition::new(dataset.subset(&order[ntrain + ncv..ntrain + ncv + ntest])),
    })
}
