use std::borrow::Cow;

use ndarray::ArrayView2;

use super::TrainConfig;
use crate::error::{check_dim, invalid, GmcError, Result};
use crate::model::{EvalBuffers, Planes};

/// A view of training rows. `rows` selects which rows of `features`
/// take part, so shuffled minibatches need no copying.
#[derive(Debug, Clone)]
pub struct Batch<'a> {
    pub features: ArrayView2<'a, f64>,
    pub labels: &'a [usize],
    pub rows: Cow<'a, [usize]>,
}

impl<'a> Batch<'a> {
    pub fn all(features: ArrayView2<'a, f64>, labels: &'a [usize]) -> Self {
        Self {
            rows: Cow::Owned((0..labels.len()).collect()),
            features,
            labels,
        }
    }

    pub fn subset(features: ArrayView2<'a, f64>, labels: &'a [usize], rows: &'a [usize]) -> Self {
        Self {
            features,
            labels,
            rows: Cow::Borrowed(rows),
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    fn validate(&self, planes: &Planes) -> Result<()> {
        if self.is_empty() {
            return Err(invalid("empty batch"));
        }
        check_dim(planes.dim(), self.features.ncols())?;
        check_dim(self.features.nrows(), self.labels.len())?;
        let c = planes.class_count();
        for &i in self.rows.iter() {
            if i >= self.labels.len() {
                return Err(invalid(format!("row index {i} out of range")));
            }
            if self.labels[i] >= c {
                return Err(invalid(format!("label {} out of range for {c} classes", self.labels[i])));
            }
        }
        Ok(())
    }
}

/// Smoothed one-hot targets: `(1 - eps)·1{y = c} + eps / C`.
pub fn smooth_targets(labels: &[usize], class_count: usize, eps: f64) -> Result<Vec<Vec<f64>>> {
    if !(0.0..1.0).contains(&eps) {
        return Err(invalid(format!("label smoothing must lie in [0, 1), got {eps}")));
    }
    labels
        .iter()
        .map(|&y| {
            if y >= class_count {
                return Err(invalid(format!("label {y} out of range for {class_count} classes")));
            }
            let mut t = vec![eps / class_count as f64; class_count];
            t[y] += 1.0 - eps;
            Ok(t)
        })
        .collect()
}

/// Mean weighted cross-entropy of class logits `s` against targets,
/// computed through a stable log-softmax.
pub fn cross_entropy(logits: &[Vec<f64>], targets: &[Vec<f64>], weights: Option<&[f64]>) -> Result<f64> {
    check_dim(logits.len(), targets.len())?;
    if logits.is_empty() {
        return Err(invalid("no examples"));
    }
    let mut total = 0.0;
    for (s, t) in logits.iter().zip(targets) {
        check_dim(s.len(), t.len())?;
        let max = s.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + s.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        let y = crate::model::argmax(t);
        let w = weights.map_or(1.0, |w| w[y]);
        total -= w * s.iter().zip(t).map(|(sc, tc)| tc * (sc - lse)).sum::<f64>();
    }
    Ok(total / logits.len() as f64)
}

/// Per-plane L2 coefficients `λ (1 + β / (u + δ))`.
pub fn usage_coefficients(usage: &[f64], lambda: f64, beta: f64, delta: f64) -> Vec<f64> {
    usage.iter().map(|&u| lambda * (1.0 + beta / (u + delta))).collect()
}

/// Running average of per-plane responsibilities on the training data.
#[derive(Debug, Clone, PartialEq)]
pub struct UsageTracker {
    usage: Vec<f64>,
    momentum: f64,
}

impl UsageTracker {
    /// Starts every class at uniform usage `1 / M_c`.
    pub fn new(planes: &Planes, momentum: f64) -> Self {
        let mut usage = vec![0.0; planes.total_planes()];
        for c in 0..planes.class_count() {
            let m = planes.plane_count(c) as f64;
            for u in &mut usage[planes.range(c)] {
                *u = 1.0 / m;
            }
        }
        Self { usage, momentum }
    }

    pub fn usage(&self) -> &[f64] {
        &self.usage
    }

    pub fn update(&mut self, batch_usage: &[f64]) {
        for (u, &b) in self.usage.iter_mut().zip(batch_usage) {
            *u = self.momentum * *u + (1.0 - self.momentum) * b;
        }
    }

    pub fn coefficients(&self, cfg: &TrainConfig) -> Vec<f64> {
        usage_coefficients(&self.usage, cfg.lambda, cfg.beta, cfg.delta)
    }
}

/// Result of one loss-and-gradient evaluation.
#[derive(Debug, Clone)]
pub struct BatchGradient {
    /// Cross-entropy plus penalty.
    pub loss: f64,
    pub cross_entropy: f64,
    pub penalty: f64,
    /// Same layout as the planes.
    pub grad: Planes,
    /// Mean responsibility of each plane over the batch.
    pub batch_usage: Vec<f64>,
}

fn targets_row(t: &mut [f64], y: usize, eps: f64) {
    let c = t.len() as f64;
    t.fill(eps / c);
    t[y] += 1.0 - eps;
}

fn data_pass(batch: &Batch<'_>, planes: &Planes, alpha: f64, cfg: &TrainConfig, grad: &mut Planes) -> Result<(f64, Vec<f64>)> {
    batch.validate(planes)?;
    if !(alpha > 0.0) {
        return Err(invalid(format!("alpha must be positive, got {alpha}")));
    }
    let n = batch.len() as f64;
    let dim = planes.dim();
    let classes = planes.class_count();
    let mut buf = EvalBuffers::for_planes(planes);
    let mut t = vec![0.0; classes];
    let mut usage = vec![0.0; planes.total_planes()];
    let mut ce = 0.0;
    for &i in batch.rows.iter() {
        let phi = batch.features.row(i);
        let phi = phi.as_slice().ok_or_else(|| invalid("feature rows must be contiguous"))?;
        let y = batch.labels[i];
        let w = cfg.class_weights.as_ref().map_or(1.0, |w| w[y]);
        let lse = planes.evaluate_into(phi, alpha, &mut buf);
        targets_row(&mut t, y, cfg.label_smoothing);
        for c in 0..classes {
            ce -= w * t[c] * (buf.s[c] - lse);
            let ds = w * (buf.p[c] - t[c]) / n;
            for k in planes.range(c) {
                let a = buf.a[k];
                usage[k] += a / n;
                let dz = ds * a;
                if dz != 0.0 {
                    for (g, &f) in grad.weight_mut(k).iter_mut().zip(phi) {
                        *g += dz * f;
                    }
                    grad.biases_mut()[k] += dz;
                }
            }
        }
    }
    debug_assert_eq!(grad.dim(), dim);
    Ok((ce / n, usage))
}

fn add_penalty(planes: &Planes, coeffs: &[f64], grad: &mut Planes) -> Result<f64> {
    check_dim(planes.total_planes(), coeffs.len())?;
    let mut penalty = 0.0;
    for (k, &lam) in coeffs.iter().enumerate() {
        let w = planes.weight(k);
        penalty += lam * w.iter().map(|v| v * v).sum::<f64>();
        for (g, &v) in grad.weight_mut(k).iter_mut().zip(w) {
            *g += 2.0 * lam * v;
        }
    }
    Ok(penalty)
}

/// Loss and gradient with fixed per-plane L2 coefficients.
pub fn gradients_with_coefficients(
    batch: &Batch<'_>,
    planes: &Planes,
    alpha: f64,
    coeffs: &[f64],
    cfg: &TrainConfig,
) -> Result<BatchGradient> {
    let mut grad = planes.zeros_like();
    let (ce, batch_usage) = data_pass(batch, planes, alpha, cfg, &mut grad)?;
    let penalty = add_penalty(planes, coeffs, &mut grad)?;
    finish(ce, penalty, grad, batch_usage)
}

/// Loss and gradient for one training step. The tracker absorbs this
/// batch's usage first; the resulting coefficients are then held fixed
/// for the step.
pub fn gradients(
    batch: &Batch<'_>,
    planes: &Planes,
    alpha: f64,
    tracker: &mut UsageTracker,
    cfg: &TrainConfig,
) -> Result<BatchGradient> {
    let mut grad = planes.zeros_like();
    let (ce, batch_usage) = data_pass(batch, planes, alpha, cfg, &mut grad)?;
    tracker.update(&batch_usage);
    let coeffs = tracker.coefficients(cfg);
    let penalty = add_penalty(planes, &coeffs, &mut grad)?;
    finish(ce, penalty, grad, batch_usage)
}

fn finish(ce: f64, penalty: f64, grad: Planes, batch_usage: Vec<f64>) -> Result<BatchGradient> {
    let loss = ce + penalty;
    if !loss.is_finite() || !grad.is_finite() {
        return Err(GmcError::NonFinite("loss or gradient".into()));
    }
    Ok(BatchGradient {
        loss,
        cross_entropy: ce,
        penalty,
        grad,
        batch_usage,
    })
}

/// Objective value only, with fixed coefficients.
pub fn total_loss(batch: &Batch<'_>, planes: &Planes, alpha: f64, coeffs: &[f64], cfg: &TrainConfig) -> Result<f64> {
    batch.validate(planes)?;
    check_dim(planes.total_planes(), coeffs.len())?;
    let mut buf = EvalBuffers::for_planes(planes);
    let mut logits = Vec::with_capacity(batch.len());
    let mut labels = Vec::with_capacity(batch.len());
    for &i in batch.rows.iter() {
        let phi = batch.features.row(i).to_vec();
        planes.evaluate_into(&phi, alpha, &mut buf);
        logits.push(buf.s.clone());
        labels.push(batch.labels[i]);
    }
    let targets = smooth_targets(&labels, planes.class_count(), cfg.label_smoothing)?;
    let ce = cross_entropy(&logits, &targets, cfg.class_weights.as_deref())?;
    let penalty: f64 = coeffs
        .iter()
        .enumerate()
        .map(|(k, lam)| lam * planes.weight(k).iter().map(|v| v * v).sum::<f64>())
        .sum();
    Ok(ce + penalty)
}

/// Unsmoothed, unweighted mean negative log-likelihood.
pub fn nll(features: ArrayView2<'_, f64>, labels: &[usize], planes: &Planes, alpha: f64) -> Result<f64> {
    let batch = Batch::all(features, labels);
    batch.validate(planes)?;
    let mut buf = EvalBuffers::for_planes(planes);
    let mut total = 0.0;
    for (i, &y) in labels.iter().enumerate() {
        let row = features.row(i);
        let lse = match row.as_slice() {
            Some(phi) => planes.evaluate_into(phi, alpha, &mut buf),
            None => planes.evaluate_into(&row.to_vec(), alpha, &mut buf),
        };
        total -= buf.s[y] - lse;
    }
    Ok(total / labels.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn smoothing_example() {
        let t = smooth_targets(&[1], 3, 0.03).unwrap();
        assert!((t[0][0] - 0.01).abs() < 1e-15);
        assert!((t[0][1] - 0.98).abs() < 1e-15);
        assert!((t[0][2] - 0.01).abs() < 1e-15);
    }

    #[test]
    fn uniform_logits_give_log_c() {
        let logits = vec![vec![0.0; 4]; 3];
        let targets = smooth_targets(&[0, 2, 3], 4, 0.1).unwrap();
        let ce = cross_entropy(&logits, &targets, None).unwrap();
        assert!((ce - 4f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn coefficient_example() {
        let c = usage_coefficients(&[0.0], 1e-4, 0.5, 1e-3);
        assert!((c[0] - 0.0501).abs() < 1e-12);
    }

    #[test]
    fn tracker_starts_uniform_and_blends() {
        let planes = Planes::zeros(2, &[2, 4]).unwrap();
        let mut t = UsageTracker::new(&planes, 0.9);
        assert_eq!(t.usage(), &[0.5, 0.5, 0.25, 0.25, 0.25, 0.25]);
        t.update(&[1.0, 0.0, 0.25, 0.25, 0.25, 0.25]);
        assert!((t.usage()[0] - 0.55).abs() < 1e-15);
        assert!((t.usage()[1] - 0.45).abs() < 1e-15);
    }

    fn random_problem(seed: u64) -> (Array2<f64>, Vec<usize>, Planes) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dim = 3;
        let x = Array2::from_shape_fn((7, dim), |_| rng.random_range(-1.5..1.5));
        let labels = vec![0, 1, 2, 0, 1, 2, 2];
        let mut planes = Planes::zeros(dim, &[2, 1, 3]).unwrap();
        for p in planes.params_mut() {
            *p = rng.random_range(-1.0..1.0);
        }
        (x, labels, planes)
    }

    #[test]
    fn analytic_gradient_matches_finite_differences() {
        for seed in 0..5 {
            let (x, labels, planes) = random_problem(seed);
            let cfg = TrainConfig {
                class_weights: Some(vec![1.0, 2.0, 0.5]),
                lambda: 0.03,
                ..Default::default()
            };
            let coeffs = usage_coefficients(&[0.1, 0.9, 1.0, 0.2, 0.3, 0.5], cfg.lambda, cfg.beta, cfg.delta);
            let batch = Batch::all(x.view(), &labels);
            let alpha = 3.7;
            let g = gradients_with_coefficients(&batch, &planes, alpha, &coeffs, &cfg).unwrap();
            let base = total_loss(&batch, &planes, alpha, &coeffs, &cfg).unwrap();
            assert!((g.loss - base).abs() < 1e-12);
            let h = 1e-6;
            for j in 0..planes.params().len() {
                let mut up = planes.clone();
                up.params_mut()[j] += h;
                let mut dn = planes.clone();
                dn.params_mut()[j] -= h;
                let fd = (total_loss(&batch, &up, alpha, &coeffs, &cfg).unwrap()
                    - total_loss(&batch, &dn, alpha, &coeffs, &cfg).unwrap())
                    / (2.0 * h);
                let an = g.grad.params()[j];
                let rel = (fd - an).abs() / fd.abs().max(an.abs()).max(1e-8);
                assert!(rel < 1e-5 || (fd - an).abs() < 1e-9, "seed {seed} param {j}: fd {fd} vs {an}");
            }
        }
    }

    #[test]
    fn biases_are_not_penalized() {
        let mut planes = Planes::zeros(1, &[1, 1]).unwrap();
        planes.biases_mut().copy_from_slice(&[3.0, -3.0]);
        let x = Array2::zeros((2, 1));
        let labels = [0, 1];
        let cfg = TrainConfig { label_smoothing: 0.0, ..Default::default() };
        let g = gradients_with_coefficients(&Batch::all(x.view(), &labels), &planes, 4.0, &[10.0, 10.0], &cfg).unwrap();
        assert_eq!(g.penalty, 0.0);
    }

    #[test]
    fn batch_usage_sums_to_one_per_class() {
        let (x, labels, planes) = random_problem(9);
        let mut tracker = UsageTracker::new(&planes, 0.9);
        let g = gradients(&Batch::all(x.view(), &labels), &planes, 3.0, &mut tracker, &TrainConfig::default()).unwrap();
        for c in 0..3 {
            let s: f64 = g.batch_usage[planes.range(c)].iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
            let t: f64 = tracker.usage()[planes.range(c)].iter().sum();
            assert!((t - 1.0).abs() < 1e-12);
        }
    }
}
