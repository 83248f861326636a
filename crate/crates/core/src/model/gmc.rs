use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;

use super::softor::{pool_into, softmax_into};
use super::Planes;
use crate::error::{check_dim, invalid, Result};
use crate::features::{FeaturePipeline, PipelineScratch};

/// Per-plane and per-class quantities for one input.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardResult {
    offsets: Vec<usize>,
    /// `z`, indexed by global plane.
    pub plane_scores: Vec<f64>,
    /// `a`, indexed by global plane; sums to 1 within each class.
    pub responsibilities: Vec<f64>,
    /// `s`, one per class.
    pub class_scores: Vec<f64>,
    /// `p`, one per class.
    pub posterior: Vec<f64>,
}

impl ForwardResult {
    pub fn plane_scores_of(&self, c: usize) -> &[f64] {
        &self.plane_scores[self.offsets[c]..self.offsets[c + 1]]
    }

    pub fn responsibilities_of(&self, c: usize) -> &[f64] {
        &self.responsibilities[self.offsets[c]..self.offsets[c + 1]]
    }

    pub fn predicted(&self) -> usize {
        argmax(&self.posterior)
    }
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Working buffers for the per-example hot path.
#[derive(Debug, Clone, Default)]
pub struct EvalBuffers {
    pub z: Vec<f64>,
    pub a: Vec<f64>,
    pub s: Vec<f64>,
    pub p: Vec<f64>,
}

impl EvalBuffers {
    pub fn for_planes(planes: &Planes) -> Self {
        let m = planes.total_planes();
        let c = planes.class_count();
        Self {
            z: vec![0.0; m],
            a: vec![0.0; m],
            s: vec![0.0; c],
            p: vec![0.0; c],
        }
    }
}

impl Planes {
    /// Full forward pass on an already-mapped feature vector. Returns
    /// `log Σ_k exp(s_k)` so callers can form log-posteriors `s_c - lse`.
    #[inline]
    pub fn evaluate_into(&self, phi: &[f64], alpha: f64, buf: &mut EvalBuffers) -> f64 {
        self.scores_into(phi, &mut buf.z);
        for c in 0..self.class_count() {
            let r = self.range(c);
            buf.s[c] = pool_into(&buf.z[r.clone()], alpha, &mut buf.a[r]);
        }
        softmax_into(&buf.s, &mut buf.p)
    }
}

/// A fitted classifier: feature pipeline, per-class planes and pooling
/// temperature.
#[derive(Debug, Clone, PartialEq)]
pub struct GmcModel {
    pub pipeline: FeaturePipeline,
    pub planes: Planes,
    pub alpha: f64,
    pub class_names: Vec<String>,
}

/// Per-thread scratch for [`GmcModel::forward_into`].
#[derive(Debug, Clone, Default)]
pub struct ForwardScratch {
    pipeline: PipelineScratch,
    phi: Vec<f64>,
    pub eval: EvalBuffers,
}

impl ForwardScratch {
    pub fn for_model(model: &GmcModel) -> Self {
        Self {
            pipeline: PipelineScratch::default(),
            phi: vec![0.0; model.planes.dim()],
            eval: EvalBuffers::for_planes(&model.planes),
        }
    }
}

impl GmcModel {
    pub fn new(pipeline: FeaturePipeline, planes: Planes, alpha: f64, class_names: Vec<String>) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(invalid(format!("alpha must be positive, got {alpha}")));
        }
        check_dim(pipeline.output_dim(), planes.dim())?;
        check_dim(planes.class_count(), class_names.len())?;
        planes.ensure_finite("plane parameters")?;
        Ok(Self {
            pipeline,
            planes,
            alpha,
            class_names,
        })
    }

    pub fn class_count(&self) -> usize {
        self.planes.class_count()
    }

    pub fn input_dim(&self) -> usize {
        self.pipeline.input_dim()
    }

    /// Copy with a different pooling temperature.
    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        Self::new(self.pipeline.clone(), self.planes.clone(), alpha, self.class_names.clone())
    }

    /// Plane scores for an already-mapped input, grouped by class.
    pub fn plane_scores(&self, phi: &[f64]) -> Result<Vec<Vec<f64>>> {
        check_dim(self.planes.dim(), phi.len())?;
        let mut z = vec![0.0; self.planes.total_planes()];
        self.planes.scores_into(phi, &mut z);
        Ok((0..self.class_count())
            .map(|c| z[self.planes.range(c)].to_vec())
            .collect())
    }

    /// Allocation-free forward pass of a raw input; results land in
    /// `scratch.eval`.
    #[inline]
    pub fn forward_into(&self, x: &[f64], scratch: &mut ForwardScratch) -> Result<()> {
        scratch.phi.resize(self.planes.dim(), 0.0);
        self.pipeline
            .apply_row_into(x, &mut scratch.pipeline, &mut scratch.phi)?;
        self.planes
            .evaluate_into(&scratch.phi, self.alpha, &mut scratch.eval);
        Ok(())
    }

    pub fn forward(&self, x: &[f64]) -> Result<ForwardResult> {
        let mut scratch = ForwardScratch::for_model(self);
        self.forward_into(x, &mut scratch)?;
        Ok(self.collect(scratch.eval))
    }

    /// Forward pass on a vector already in the working feature space.
    pub fn forward_features(&self, phi: &[f64]) -> Result<ForwardResult> {
        check_dim(self.planes.dim(), phi.len())?;
        let mut buf = EvalBuffers::for_planes(&self.planes);
        self.planes.evaluate_into(phi, self.alpha, &mut buf);
        Ok(self.collect(buf))
    }

    fn collect(&self, buf: EvalBuffers) -> ForwardResult {
        ForwardResult {
            offsets: self.planes.offsets().to_vec(),
            plane_scores: buf.z,
            responsibilities: buf.a,
            class_scores: buf.s,
            posterior: buf.p,
        }
    }

    /// Forward every row. Rows are independent, so the parallel map gives
    /// the same bits as a sequential loop.
    pub fn forward_batch(&self, x: ArrayView2<'_, f64>) -> Result<Vec<ForwardResult>> {
        check_dim(self.input_dim(), x.ncols())?;
        let rows: Vec<Vec<f64>> = x.rows().into_iter().map(|r| r.to_vec()).collect();
        rows.par_iter()
            .map_init(
                || ForwardScratch::for_model(self),
                |scratch, row| {
                    self.forward_into(row, scratch)?;
                    Ok(self.collect(scratch.eval.clone()))
                },
            )
            .collect()
    }

    fn rowwise(&self, x: ArrayView2<'_, f64>, pick: impl Fn(&EvalBuffers) -> &[f64] + Sync) -> Result<Array2<f64>> {
        check_dim(self.input_dim(), x.ncols())?;
        let c = self.class_count();
        let rows: Vec<Vec<f64>> = x.rows().into_iter().map(|r| r.to_vec()).collect();
        let out: Vec<Vec<f64>> = rows
            .par_iter()
            .map_init(
                || ForwardScratch::for_model(self),
                |scratch, row| {
                    self.forward_into(row, scratch)?;
                    Ok(pick(&scratch.eval).to_vec())
                },
            )
            .collect::<Result<_>>()?;
        Ok(Array2::from_shape_fn((out.len(), c), |(i, j)| out[i][j]))
    }

    /// Posterior rows `p(x)`.
    pub fn predict_proba(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        self.rowwise(x, |b| &b.p)
    }

    /// Class-score rows `s(x)` (the logits used for temperature scaling).
    pub fn class_scores(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        self.rowwise(x, |b| &b.s)
    }

    /// Arg-max of the posterior per row; ties go to the lower class index.
    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Result<Vec<usize>> {
        let p = self.predict_proba(x)?;
        Ok(p.rows().into_iter().map(|r| argmax(r.as_slice().unwrap())).collect())
    }
}
