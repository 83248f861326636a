use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, invalid, GmcError, Result};

/// Projection onto the leading principal directions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaMap {
    /// `d × r`, orthonormal columns sorted by descending eigenvalue.
    pub components: Array2<f64>,
    pub center: Array1<f64>,
    /// Fraction of total variance captured by the retained components.
    pub variance_retained: f64,
    /// All covariance eigenvalues (denominator `N - 1`), descending.
    pub eigenvalues: Vec<f64>,
}

impl PcaMap {
    /// Keep the fewest components whose cumulative explained variance
    /// reaches `variance_retained`.
    pub fn fit(x: ArrayView2<'_, f64>, variance_retained: f64) -> Result<Self> {
        if !(variance_retained > 0.0 && variance_retained <= 1.0) {
            return Err(invalid(format!(
                "variance_retained must lie in (0, 1], got {variance_retained}"
            )));
        }
        let (n, d) = x.dim();
        if n < 2 {
            return Err(invalid("PCA needs at least 2 rows"));
        }
        let center = x.mean_axis(Axis(0)).expect("non-empty");
        let centered = &x - &center;
        let cov = centered.t().dot(&centered) / (n as f64 - 1.0);
        if cov.iter().any(|v| !v.is_finite()) {
            return Err(GmcError::NonFinite("PCA covariance".into()));
        }
        let eig = SymmetricEigen::new(DMatrix::from_fn(d, d, |i, j| cov[[i, j]]));
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();
        let total: f64 = eigenvalues.iter().sum();

        let mut keep = d;
        if total > 0.0 {
            let target = variance_retained * total - 1e-12 * total;
            let mut acc = 0.0;
            for (k, ev) in eigenvalues.iter().enumerate() {
                acc += ev;
                if acc >= target {
                    keep = k + 1;
                    break;
                }
            }
        } else {
            keep = 1;
        }
        let components = Array2::from_shape_fn((d, keep), |(i, k)| eig.eigenvectors[(i, order[k])]);
        let retained = if total > 0.0 {
            eigenvalues[..keep].iter().sum::<f64>() / total
        } else {
            1.0
        };
        Ok(Self {
            components,
            center,
            variance_retained: retained.min(1.0),
            eigenvalues,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.components.nrows()
    }

    pub fn output_dim(&self) -> usize {
        self.components.ncols()
    }

    pub fn transform_into(&self, x: &[f64], centered: &mut [f64], out: &mut [f64]) -> Result<()> {
        check_dim(self.input_dim(), x.len())?;
        for ((c, v), m) in centered.iter_mut().zip(x).zip(&self.center) {
            *c = v - m;
        }
        for (k, o) in out.iter_mut().enumerate() {
            *o = self
                .components
                .column(k)
                .iter()
                .zip(centered.iter())
                .map(|(a, b)| a * b)
                .sum();
        }
        Ok(())
    }
}
