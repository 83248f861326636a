//! Labelled tabular data: synthetic generators, CSV ingestion and
//! stratified splitting.

mod split;
mod synthetic;
mod tabular;

pub use split::{stratified_split, SplitSpec, StratifiedSplit};
pub use synthetic::{
    make_aniso_blobs, make_circles, make_moons, make_two_spirals, SyntheticKind, ANISO_CENTERS,
    ANISO_SHEAR,
};
pub use tabular::{load_csv, read_csv, write_csv, LabelColumn};

use ndarray::{Array2, ArrayView1, ArrayView2, Axis};
use sha2::{Digest, Sha256};

use crate::error::{GmcError, Result};

/// Feature matrix with integer class labels in `0..class_count`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Array2<f64>,
    labels: Vec<usize>,
    class_count: usize,
    feature_names: Option<Vec<String>>,
    class_names: Vec<String>,
}

impl Dataset {
    /// Build a dataset, checking that every label is in range, every class
    /// occurs and all features are finite.
    pub fn new(features: Array2<f64>, labels: Vec<usize>, class_count: usize) -> Result<Self> {
        let ds = Self::unchecked(features, labels, class_count);
        ds.validate(true)?;
        Ok(ds)
    }

    /// Like [`Dataset::new`] but classes may be absent, as in evaluation
    /// data labelled against a model's full class list.
    pub fn with_absent_classes(features: Array2<f64>, labels: Vec<usize>, class_count: usize) -> Result<Self> {
        let ds = Self::unchecked(features, labels, class_count);
        ds.validate(false)?;
        Ok(ds)
    }

    fn unchecked(features: Array2<f64>, labels: Vec<usize>, class_count: usize) -> Self {
        let class_names = (0..class_count).map(|c| c.to_string()).collect();
        Self {
            features,
            labels,
            class_count,
            feature_names: None,
            class_names,
        }
    }

    fn validate(&self, require_all_classes: bool) -> Result<()> {
        if self.features.nrows() != self.labels.len() {
            return Err(GmcError::DimensionMismatch {
                expected: self.features.nrows(),
                actual: self.labels.len(),
            });
        }
        if self.class_count == 0 {
            return Err(GmcError::InvalidData("class_count must be positive".into()));
        }
        let mut seen = vec![false; self.class_count];
        for (i, &y) in self.labels.iter().enumerate() {
            if y >= self.class_count {
                return Err(GmcError::InvalidData(format!(
                    "label {y} at row {i} is outside 0..{}",
                    self.class_count
                )));
            }
            seen[y] = true;
        }
        if require_all_classes {
            if let Some(c) = seen.iter().position(|s| !s) {
                return Err(GmcError::InvalidData(format!("class {c} has no samples")));
            }
        }
        if self.features.iter().any(|v| !v.is_finite()) {
            return Err(GmcError::NonFinite("dataset features".into()));
        }
        Ok(())
    }

    pub fn with_feature_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.dim() {
            return Err(GmcError::DimensionMismatch {
                expected: self.dim(),
                actual: names.len(),
            });
        }
        self.feature_names = Some(names);
        Ok(self)
    }

    pub fn with_class_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.class_count {
            return Err(GmcError::DimensionMismatch {
                expected: self.class_count,
                actual: names.len(),
            });
        }
        self.class_names = names;
        Ok(self)
    }

    pub fn features(&self) -> ArrayView2<'_, f64> {
        self.features.view()
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.features.row(i)
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn feature_names(&self) -> Option<&[String]> {
        self.feature_names.as_deref()
    }

    /// Names for each class index; defaults to the decimal index.
    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.class_count];
        for &y in &self.labels {
            counts[y] += 1;
        }
        counts
    }

    /// Rows of class `c`, in dataset order.
    pub fn class_indices(&self, c: usize) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter_map(|(i, &y)| (y == c).then_some(i))
            .collect()
    }

    /// Subset by row index. The class set is kept even if some class ends
    /// up absent from the subset.
    pub fn select(&self, indices: &[usize]) -> Dataset {
        Dataset {
            features: self.features.select(Axis(0), indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            class_count: self.class_count,
            feature_names: self.feature_names.clone(),
            class_names: self.class_names.clone(),
        }
    }

    /// SHA-256 over shape, features (little-endian f64 bits) and labels.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.len() as u64).to_le_bytes());
        h.update((self.dim() as u64).to_le_bytes());
        for v in self.features.iter() {
            h.update(v.to_bits().to_le_bytes());
        }
        for &y in &self.labels {
            h.update((y as u64).to_le_bytes());
        }
        h.finalize()
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect::<String>()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn rejects_out_of_range_label() {
        let err = Dataset::new(array![[0.0], [1.0]], vec![0, 2], 2).unwrap_err();
        assert!(matches!(err, GmcError::InvalidData(_)));
    }

    #[test]
    fn absent_classes_allowed_only_when_asked() {
        let ds = Dataset::with_absent_classes(array![[0.0], [1.0]], vec![0, 0], 3).unwrap();
        assert_eq!(ds.class_counts(), vec![2, 0, 0]);
        assert!(Dataset::with_absent_classes(array![[0.0]], vec![3], 3).is_err());
    }

    #[test]
    fn rejects_missing_class_and_nan() {
        assert!(Dataset::new(array![[0.0], [1.0]], vec![0, 0], 2).is_err());
        assert!(Dataset::new(array![[f64::NAN], [1.0]], vec![0, 1], 2).is_err());
    }

    #[test]
    fn select_keeps_class_set() {
        let ds = Dataset::new(array![[0.0], [1.0], [2.0]], vec![0, 1, 0], 2).unwrap();
        let sub = ds.select(&[0, 2]);
        assert_eq!(sub.class_count(), 2);
        assert_eq!(sub.class_counts(), vec![2, 0]);
        assert_eq!(sub.features()[[1, 0]], 2.0);
    }

    #[test]
    fn fingerprint_tracks_content() {
        let a = Dataset::new(array![[0.0], [1.0]], vec![0, 1], 2).unwrap();
        let b = Dataset::new(array![[0.0], [1.5]], vec![0, 1], 2).unwrap();
        assert_eq!(a.fingerprint(), a.clone().fingerprint());
        assert_ne!(a.fingerprint(), b.fingerprint());
    }
}
