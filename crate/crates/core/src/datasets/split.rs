use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{invalid, GmcError, Result};
use crate::rng::{seeded, stream};

/// Train/validation/test fractions plus the shuffling seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub val_fraction: f64,
    pub test_fraction: f64,
    pub seed: u64,
}

impl SplitSpec {
    /// The 60/20/20 protocol.
    pub fn standard(seed: u64) -> Self {
        Self {
            train_fraction: 0.6,
            val_fraction: 0.2,
            test_fraction: 0.2,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let f = [self.train_fraction, self.val_fraction, self.test_fraction];
        if f.iter().any(|&v| !(v > 0.0)) {
            return Err(invalid("split fractions must be positive"));
        }
        if (f.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(invalid("split fractions must sum to 1"));
        }
        Ok(())
    }
}

/// The three partitions along with the source row indices of each.
#[derive(Debug, Clone)]
pub struct StratifiedSplit {
    pub train: Dataset,
    pub val: Dataset,
    pub test: Dataset,
    pub train_indices: Vec<usize>,
    pub val_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
}

/// Shuffle each class independently and cut it by the requested fractions.
/// Per-class counts are `round(f·n_c)` for train and validation; test takes
/// the remainder, so every split is within one sample of its target.
pub fn stratified_split(ds: &Dataset, spec: &SplitSpec) -> Result<StratifiedSplit> {
    spec.validate()?;
    let mut rng = seeded(spec.seed, stream::SPLIT);
    let mut parts: [Vec<usize>; 3] = Default::default();
    for c in 0..ds.class_count() {
        let mut idx = ds.class_indices(c);
        if idx.len() < 3 {
            return Err(GmcError::InvalidData(format!(
                "class {c} has {} samples; stratified splitting needs at least 3",
                idx.len()
            )));
        }
        idx.shuffle(&mut rng);
        let n = idx.len() as f64;
        let n_train = (spec.train_fraction * n).round() as usize;
        let n_val = ((spec.val_fraction * n).round() as usize).min(idx.len() - n_train);
        parts[0].extend_from_slice(&idx[..n_train]);
        parts[1].extend_from_slice(&idx[n_train..n_train + n_val]);
        parts[2].extend_from_slice(&idx[n_train + n_val..]);
    }
    for p in parts.iter_mut() {
        p.sort_unstable();
    }
    let [train_indices, val_indices, test_indices] = parts;
    Ok(StratifiedSplit {
        train: ds.select(&train_indices),
        val: ds.select(&val_indices),
        test: ds.select(&test_indices),
        train_indices,
        val_indices,
        test_indices,
    })
}
