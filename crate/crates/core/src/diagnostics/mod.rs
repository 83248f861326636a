//! Interpretability outputs: responsibility concentration, plane usage,
//! per-plane saliency and 2-D decision / responsibility grids.

mod grid;
mod saliency;
mod stats;

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

pub use grid::{decision_grid, responsibility_grid, Bounds, GridMap, DEFAULT_RESOLUTION};
pub use saliency::{plane_saliency, SalientFeature};
pub use stats::{plane_usage, responsibility_stats, PlaneUsage, ResponsibilityStats};

use crate::error::Result;
use crate::model::GmcModel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterpretabilityReport {
    pub maxresp: f64,
    pub resp_entropy: f64,
    pub plane_usage: PlaneUsage,
    /// `saliency[c][m]` lists the top features of each plane; `None` for
    /// lifted models.
    pub saliency: Option<Vec<Vec<Vec<SalientFeature>>>>,
}

pub fn interpretability_report(
    model: &GmcModel,
    x: ArrayView2<'_, f64>,
    y: &[usize],
    top_k: usize,
    feature_names: Option<&[String]>,
) -> Result<InterpretabilityReport> {
    let stats = responsibility_stats(model, x, y)?;
    let usage = plane_usage(model, x, y)?;
    let saliency = if model.pipeline.rff.is_some() {
        None
    } else {
        let k = top_k.min(model.input_dim());
        let per_class = (0..model.class_count())
            .map(|c| {
                (0..model.planes.plane_count(c))
                    .map(|m| plane_saliency(model, c, m, k, feature_names))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Some(per_class)
    };
    Ok(InterpretabilityReport {
        maxresp: stats.maxresp,
        resp_entropy: stats.resp_entropy,
        plane_usage: usage,
        saliency,
    })
}
