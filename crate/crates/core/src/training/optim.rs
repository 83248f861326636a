use crate::error::{check_dim, GmcError, Result};

/// Adam over a flat parameter vector.
#[derive(Debug, Clone)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: i32,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Adam {
    pub fn new(len: usize) -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: vec![0.0; len],
            v: vec![0.0; len],
        }
    }

    pub fn steps(&self) -> i32 {
        self.step
    }

    /// One bias-corrected update. Leaves `params` untouched and returns an
    /// error if the update would be non-finite.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64], lr: f64) -> Result<()> {
        check_dim(self.m.len(), params.len())?;
        check_dim(self.m.len(), grads.len())?;
        let t = self.step + 1;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        let mut next_m = self.m.clone();
        let mut next_v = self.v.clone();
        let mut next_p = params.to_vec();
        for i in 0..params.len() {
            let g = grads[i];
            next_m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            next_v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let mh = next_m[i] / c1;
            let vh = next_v[i] / c2;
            next_p[i] -= lr * mh / (vh.sqrt() + self.eps);
            if !next_p[i].is_finite() {
                return Err(GmcError::NonFinite(format!("parameter {i} after update")));
            }
        }
        self.m = next_m;
        self.v = next_v;
        self.step = t;
        params.copy_from_slice(&next_p);
        Ok(())
    }
}

/// Rescales `grads` so its L2 norm is at most `max_norm`. Returns the
/// norm before clipping.
pub fn clip_global_norm(grads: &mut [f64], max_norm: f64) -> f64 {
    let norm = grads.iter().map(|g| g * g).sum::<f64>().sqrt();
    if norm > max_norm && norm.is_finite() {
        let scale = max_norm / norm;
        for g in grads.iter_mut() {
            *g *= scale;
        }
    }
    norm
}
