use ndarray::{Array1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, invalid, Result};

/// Per-feature centring and scaling fitted on training data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Array1<f64>,
    /// Population standard deviation; zero-variance columns get 1.
    pub scale: Array1<f64>,
}

/// Columns whose spread falls below this are treated as constant.
const MIN_SCALE: f64 = 1e-12;

impl Standardizer {
    pub fn fit(x: ArrayView2<'_, f64>) -> Result<Self> {
        let n = x.nrows();
        if n < 2 {
            return Err(invalid(format!("standardizer needs at least 2 rows, got {n}")));
        }
        let mean = x.mean_axis(Axis(0)).expect("non-empty");
        let var = x.var_axis(Axis(0), 0.0);
        let scale = var.mapv(|v| {
            let s = v.sqrt();
            if s > MIN_SCALE {
                s
            } else {
                1.0
            }
        });
        Ok(Self { mean, scale })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            mean: Array1::zeros(dim),
            scale: Array1::ones(dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn transform_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        check_dim(self.dim(), x.len())?;
        for ((o, v), (m, s)) in out.iter_mut().zip(x).zip(self.mean.iter().zip(&self.scale)) {
            *o = (v - m) / s;
        }
        Ok(())
    }
}
