use ndarray::ArrayView2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, invalid, Result};
use crate::model::{argmax, ForwardScratch, GmcModel};

/// Responsibility concentration on the true class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResponsibilityStats {
    /// Mean of `max_m a_{y,m}(x)`.
    pub maxresp: f64,
    /// Mean of `-Σ_m a_{y,m} log a_{y,m}`.
    pub resp_entropy: f64,
}

/// Winner fractions per class: `fractions[c][m]` is the share of class-`c`
/// samples whose most responsible class-`c` plane is `m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaneUsage {
    pub fractions: Vec<Vec<f64>>,
    pub sample_counts: Vec<usize>,
}

impl PlaneUsage {
    /// Classes with no samples; their rows are all zero.
    pub fn absent_classes(&self) -> Vec<usize> {
        (0..self.sample_counts.len()).filter(|&c| self.sample_counts[c] == 0).collect()
    }
}

fn validate(model: &GmcModel, x: ArrayView2<'_, f64>, y: &[usize]) -> Result<()> {
    check_dim(model.input_dim(), x.ncols())?;
    check_dim(x.nrows(), y.len())?;
    if y.is_empty() {
        return Err(invalid("no samples"));
    }
    if let Some(&c) = y.iter().find(|&&c| c >= model.class_count()) {
        return Err(invalid(format!("label {c} out of range")));
    }
    Ok(())
}

/// True-class responsibilities of every sample at the model's `α`.
fn true_class_responsibilities(model: &GmcModel, x: ArrayView2<'_, f64>, y: &[usize]) -> Result<Vec<Vec<f64>>> {
    validate(model, x, y)?;
    let rows: Vec<(Vec<f64>, usize)> = x.rows().into_iter().map(|r| r.to_vec()).zip(y.iter().copied()).collect();
    rows.par_iter()
        .map_init(
            || ForwardScratch::for_model(model),
            |scratch, (row, c)| {
                model.forward_into(row, scratch)?;
                Ok(scratch.eval.a[model.planes.range(*c)].to_vec())
            },
        )
        .collect()
}

pub fn responsibility_stats(model: &GmcModel, x: ArrayView2<'_, f64>, y: &[usize]) -> Result<ResponsibilityStats> {
    let resp = true_class_responsibilities(model, x, y)?;
    let n = resp.len() as f64;
    let mut maxresp = 0.0;
    let mut entropy = 0.0;
    for a in &resp {
        maxresp += a.iter().cloned().fold(0.0, f64::max);
        entropy -= a.iter().filter(|&&v| v > 0.0).map(|v| v * v.ln()).sum::<f64>();
    }
    Ok(ResponsibilityStats {
        maxresp: maxresp / n,
        resp_entropy: entropy / n,
    })
}

pub fn plane_usage(model: &GmcModel, x: ArrayView2<'_, f64>, y: &[usize]) -> Result<PlaneUsage> {
    let resp = true_class_responsibilities(model, x, y)?;
    let mut counts: Vec<Vec<usize>> = (0..model.class_count())
        .map(|c| vec![0; model.planes.plane_count(c)])
        .collect();
    let mut totals = vec![0usize; model.class_count()];
    for (a, &c) in resp.iter().zip(y) {
        counts[c][argmax(a)] += 1;
        totals[c] += 1;
    }
    let fractions = counts
        .iter()
        .zip(&totals)
        .map(|(row, &t)| {
            row.iter()
                .map(|&k| if t == 0 { 0.0 } else { k as f64 / t as f64 })
                .collect()
        })
        .collect();
    Ok(PlaneUsage {
        fractions,
        sample_counts: totals,
    })
}
