use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use super::metrics::{ece, DEFAULT_BINS};
use crate::error::{check_dim, invalid, GmcError, Result};
use crate::model::softmax_into;

const LOG_T_MIN: f64 = -2.995_732_273_553_991; // ln 0.05
const LOG_T_MAX: f64 = 2.995_732_273_553_991; // ln 20
const TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemperatureFit {
    pub temperature: f64,
    pub val_nll_before: f64,
    pub val_nll_after: f64,
    pub ece_before: f64,
    pub ece_after: f64,
    /// Set when the scores carry no information and `T = 1` was returned.
    pub degenerate: bool,
}

/// Row-wise `softmax(s / T)`.
pub fn apply_temperature(scores: ArrayView2<'_, f64>, temperature: f64) -> Result<Array2<f64>> {
    if !(temperature > 0.0 && temperature.is_finite()) {
        return Err(invalid(format!("temperature must be positive, got {temperature}")));
    }
    let mut out = Array2::zeros(scores.raw_dim());
    let mut row = vec![0.0; scores.ncols()];
    let mut p = vec![0.0; scores.ncols()];
    for (i, s) in scores.rows().into_iter().enumerate() {
        for (r, v) in row.iter_mut().zip(s) {
            *r = v / temperature;
        }
        softmax_into(&row, &mut p);
        out.row_mut(i).assign(&ndarray::ArrayView1::from(&p));
    }
    Ok(out)
}

/// Mean negative log-likelihood of `softmax(s / T)`.
pub fn temperature_nll(scores: ArrayView2<'_, f64>, truth: &[usize], temperature: f64) -> f64 {
    let mut total = 0.0;
    for (s, &y) in scores.rows().into_iter().zip(truth) {
        let max = s.iter().cloned().fold(f64::NEG_INFINITY, f64::max) / temperature;
        let lse = max + s.iter().map(|v| (v / temperature - max).exp()).sum::<f64>().ln();
        total += lse - s[y] / temperature;
    }
    total / truth.len() as f64
}

/// Single temperature minimizing validation NLL, found by golden-section
/// search on `log T` over `[log 0.05, log 20]`. Falls back to `T = 1` if the
/// search does no better.
pub fn fit_temperature(scores: ArrayView2<'_, f64>, truth: &[usize]) -> Result<TemperatureFit> {
    check_dim(scores.nrows(), truth.len())?;
    if truth.is_empty() {
        return Err(invalid("temperature fit needs at least one sample"));
    }
    if scores.iter().any(|v| !v.is_finite()) {
        return Err(GmcError::NonFinite("class scores".into()));
    }
    if let Some(&y) = truth.iter().find(|&&y| y >= scores.ncols()) {
        return Err(invalid(format!("label {y} out of range")));
    }
    let nll_1 = temperature_nll(scores, truth, 1.0);
    let ece_1 = ece(apply_temperature(scores, 1.0)?.view(), truth, DEFAULT_BINS)?.ece;
    let degenerate = scores.rows().into_iter().all(|r| {
        let lo = r.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = r.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        hi - lo < 1e-12
    });
    if degenerate {
        return Ok(TemperatureFit {
            temperature: 1.0,
            val_nll_before: nll_1,
            val_nll_after: nll_1,
            ece_before: ece_1,
            ece_after: ece_1,
            degenerate: true,
        });
    }

    let f = |u: f64| temperature_nll(scores, truth, u.exp());
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (LOG_T_MIN, LOG_T_MAX);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > TOLERANCE {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    let mut t = ((lo + hi) / 2.0).exp();
    let mut nll_t = temperature_nll(scores, truth, t);
    if !(nll_t <= nll_1) {
        t = 1.0;
        nll_t = nll_1;
    }
    let ece_t = ece(apply_temperature(scores, t)?.view(), truth, DEFAULT_BINS)?.ece;
    Ok(TemperatureFit {
        temperature: t,
        val_nll_before: nll_1,
        val_nll_after: nll_t,
        ece_before: ece_1,
        ece_after: ece_t,
        degenerate: false,
    })
}
