use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use super::{PcaMap, RffMap, Standardizer};
use crate::error::{check_dim, Result};

/// RFF lift settings: `dim` frequency vectors (output width `2·dim`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RffConfig {
    pub dim: usize,
    pub gamma: f64,
}

/// How to build the working feature map from raw inputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct PipelineConfig {
    pub pca_variance: Option<f64>,
    pub rff: Option<RffConfig>,
    pub seed: u64,
}

impl PipelineConfig {
    pub fn linear() -> Self {
        Self::default()
    }

    pub fn with_rff(dim: usize, gamma: f64, seed: u64) -> Self {
        Self {
            pca_variance: None,
            rff: Some(RffConfig { dim, gamma }),
            seed,
        }
    }
}

/// Fitted `standardize → PCA → RFF` chain defining `φ(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeaturePipeline {
    pub standardizer: Standardizer,
    pub pca: Option<PcaMap>,
    pub rff: Option<RffMap>,
}

/// Reusable buffers for single-row transforms.
#[derive(Debug, Clone, Default)]
pub struct PipelineScratch {
    standardized: Vec<f64>,
    centered: Vec<f64>,
    projected: Vec<f64>,
}

impl FeaturePipeline {
    /// Fit every stage on the raw training matrix.
    pub fn fit(train: ArrayView2<'_, f64>, cfg: &PipelineConfig) -> Result<Self> {
        let standardizer = Standardizer::fit(train)?;
        let mut pipeline = Self {
            standardizer,
            pca: None,
            rff: None,
        };
        if let Some(v) = cfg.pca_variance {
            let z = pipeline.apply(train)?;
            pipeline.pca = Some(PcaMap::fit(z.view(), v)?);
        }
        if let Some(r) = cfg.rff {
            let d_in = pipeline.output_dim();
            pipeline.rff = Some(RffMap::sample(d_in, r.dim, r.gamma, cfg.seed)?);
        }
        Ok(pipeline)
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            standardizer: Standardizer::identity(dim),
            pca: None,
            rff: None,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.standardizer.dim()
    }

    /// Width of the pre-lift space (after standardization and PCA).
    pub fn linear_dim(&self) -> usize {
        self.pca.as_ref().map_or(self.input_dim(), PcaMap::output_dim)
    }

    /// `d′`: width of the working feature space.
    pub fn output_dim(&self) -> usize {
        self.rff
            .as_ref()
            .map_or_else(|| self.linear_dim(), RffMap::output_dim)
    }

    pub fn is_lifted(&self) -> bool {
        self.rff.is_some()
    }

    pub fn apply_row_into(&self, x: &[f64], scratch: &mut PipelineScratch, out: &mut [f64]) -> Result<()> {
        check_dim(self.input_dim(), x.len())?;
        check_dim(self.output_dim(), out.len())?;
        let s = &mut scratch.standardized;
        s.resize(self.input_dim(), 0.0);
        self.standardizer.transform_into(x, s)?;
        let mut current: &[f64] = s;
        if let Some(pca) = &self.pca {
            scratch.centered.resize(pca.input_dim(), 0.0);
            scratch.projected.resize(pca.output_dim(), 0.0);
            pca.transform_into(current, &mut scratch.centered, &mut scratch.projected)?;
            current = &scratch.projected;
        }
        match &self.rff {
            Some(rff) => rff.transform_into(current, out),
            None => {
                out.copy_from_slice(current);
                Ok(())
            }
        }
    }

    /// The standardize → PCA prefix, without the lift.
    pub fn linear_part(&self) -> Self {
        Self {
            standardizer: self.standardizer.clone(),
            pca: self.pca.clone(),
            rff: None,
        }
    }

    /// Map every row of `x` into the pre-lift space.
    pub fn apply_linear(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        self.linear_part().apply(x)
    }

    /// Map every row of `x` into the working space.
    pub fn apply(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        check_dim(self.input_dim(), x.ncols())?;
        let mut out = Array2::zeros((x.nrows(), self.output_dim()));
        let mut scratch = PipelineScratch::default();
        let mut row_buf = vec![0.0; self.input_dim()];
        for (row, mut dst) in x.rows().into_iter().zip(out.rows_mut()) {
            for (b, v) in row_buf.iter_mut().zip(row.iter()) {
                *b = *v;
            }
            self.apply_row_into(&row_buf, &mut scratch, dst.as_slice_mut().expect("row-major"))?;
        }
        Ok(out)
    }
}
