//! Log-sum-exp pooling within a class and softmax across classes.
//!
//! All reductions subtract the running maximum first, so outputs are finite
//! whenever the inputs are.

use crate::error::{invalid, GmcError, Result};

fn check_finite(values: &[f64], what: &str) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(GmcError::NonFinite(what.into()))
    }
}

/// Pool `z` at temperature `alpha`, writing responsibilities into `resp`
/// and returning `(1/α)·log Σ exp(α z)`.
///
/// The maximal term is factored out exactly, the rest summed and added via
/// `ln_1p`, which keeps the tiny correction accurate when one plane
/// dominates.
#[inline]
pub(crate) fn pool_into(z: &[f64], alpha: f64, resp: &mut [f64]) -> f64 {
    debug_assert_eq!(z.len(), resp.len());
    let (mut best, mut zmax) = (0, z[0]);
    for (m, &v) in z.iter().enumerate().skip(1) {
        if v > zmax {
            best = m;
            zmax = v;
        }
    }
    let mut rest = 0.0;
    for (m, (r, &v)) in resp.iter_mut().zip(z).enumerate() {
        let e = if m == best { 1.0 } else { (alpha * (v - zmax)).exp() };
        *r = e;
        if m != best {
            rest += e;
        }
    }
    let total = 1.0 + rest;
    for r in resp.iter_mut() {
        *r /= total;
    }
    zmax + rest.ln_1p() / alpha
}

/// Softmax of `s` into `out`; returns `log Σ exp(s)`.
#[inline]
pub(crate) fn softmax_into(s: &[f64], out: &mut [f64]) -> f64 {
    let smax = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for (o, &v) in out.iter_mut().zip(s) {
        *o = (v - smax).exp();
        sum += *o;
    }
    for o in out.iter_mut() {
        *o /= sum;
    }
    smax + sum.ln()
}

fn check_pool_args(z: &[f64], alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(invalid(format!("alpha must be positive, got {alpha}")));
    }
    if z.is_empty() {
        return Err(invalid("a class needs at least one plane score"));
    }
    check_finite(z, "plane scores")
}

/// Class score `s_c = (1/α)·log Σ_m exp(α z_{c,m})`, a smooth maximum.
pub fn class_score(z: &[f64], alpha: f64) -> Result<f64> {
    check_pool_args(z, alpha)?;
    let mut resp = vec![0.0; z.len()];
    Ok(pool_into(z, alpha, &mut resp))
}

/// Plane responsibilities: softmax of `α z` over the planes of one class.
pub fn responsibilities(z: &[f64], alpha: f64) -> Result<Vec<f64>> {
    check_pool_args(z, alpha)?;
    let mut resp = vec![0.0; z.len()];
    pool_into(z, alpha, &mut resp);
    Ok(resp)
}

/// Class posterior: softmax over class scores.
pub fn posterior(s: &[f64]) -> Result<Vec<f64>> {
    if s.is_empty() {
        return Err(invalid("posterior needs at least one class score"));
    }
    check_finite(s, "class scores")?;
    let mut p = vec![0.0; s.len()];
    softmax_into(s, &mut p);
    Ok(p)
}
