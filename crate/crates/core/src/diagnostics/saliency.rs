use serde::{Deserialize, Serialize};

use crate::error::{invalid, GmcError, Result};
use crate::model::GmcModel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SalientFeature {
    pub index: usize,
    pub name: String,
    /// Weight per raw input unit (`w / scale`).
    pub weight: f64,
    /// Weight per standard deviation; ordering uses its magnitude.
    pub standardized_weight: f64,
}

/// Input-space weights of one plane, per standardized unit. PCA stages are
/// folded back through their components.
fn standardized_weights(model: &GmcModel, c: usize, m: usize) -> Result<Vec<f64>> {
    if model.pipeline.rff.is_some() {
        return Err(GmcError::Unsupported(
            "saliency needs a linear pipeline; lifted coordinates have no per-feature meaning".into(),
        ));
    }
    if c >= model.class_count() || m >= model.planes.plane_count(c) {
        return Err(invalid(format!("no plane {m} in class {c}")));
    }
    let w = model.planes.weight(model.planes.range(c).start + m);
    Ok(match &model.pipeline.pca {
        Some(pca) => pca.components.dot(&ndarray::ArrayView1::from(w)).to_vec(),
        None => w.to_vec(),
    })
}

/// Top-`k` input features of plane `m` of class `c` by absolute weight,
/// with sign.
pub fn plane_saliency(
    model: &GmcModel,
    c: usize,
    m: usize,
    k: usize,
    feature_names: Option<&[String]>,
) -> Result<Vec<SalientFeature>> {
    let w = standardized_weights(model, c, m)?;
    if k > w.len() {
        return Err(invalid(format!("k={k} exceeds the {} input features", w.len())));
    }
    if let Some(names) = feature_names {
        crate::error::check_dim(w.len(), names.len())?;
    }
    let scale = &model.pipeline.standardizer.scale;
    let mut order: Vec<usize> = (0..w.len()).collect();
    order.sort_by(|&a, &b| w[b].abs().total_cmp(&w[a].abs()).then(a.cmp(&b)));
    Ok(order
        .into_iter()
        .take(k)
        .map(|j| SalientFeature {
            index: j,
            name: feature_names.map_or_else(|| format!("x{j}"), |n| n[j].clone()),
            weight: w[j] / scale[j],
            standardized_weight: w[j],
        })
        .collect())
}
