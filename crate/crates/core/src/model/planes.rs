use std::ops::Range;

use crate::error::{check_dim, invalid, GmcError, Result};

/// Ragged per-class hyperplanes stored contiguously.
///
/// Planes of class `c` occupy global indices `offsets[c]..offsets[c + 1]`.
/// `params` holds all weight vectors (plane-major, `dim` each) followed by
/// all biases, so optimizers and norms can treat the set as one flat
/// vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Planes {
    dim: usize,
    offsets: Vec<usize>,
    params: Vec<f64>,
}

impl Planes {
    pub fn zeros(dim: usize, counts: &[usize]) -> Result<Self> {
        if counts.is_empty() {
            return Err(invalid("at least one class is required"));
        }
        if let Some(c) = counts.iter().position(|&m| m == 0) {
            return Err(invalid(format!("class {c} needs at least one plane")));
        }
        let mut offsets = Vec::with_capacity(counts.len() + 1);
        offsets.push(0);
        for &m in counts {
            offsets.push(offsets.last().unwrap() + m);
        }
        let total = *offsets.last().unwrap();
        Ok(Self {
            dim,
            offsets,
            params: vec![0.0; total * (dim + 1)],
        })
    }

    /// Build from plane-major weights (`total × dim`) and biases.
    pub fn from_parts(dim: usize, counts: &[usize], weights: &[f64], biases: &[f64]) -> Result<Self> {
        let mut planes = Self::zeros(dim, counts)?;
        check_dim(planes.total_planes() * dim, weights.len())?;
        check_dim(planes.total_planes(), biases.len())?;
        planes.weights_mut().copy_from_slice(weights);
        planes.biases_mut().copy_from_slice(biases);
        Ok(planes)
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            dim: self.dim,
            offsets: self.offsets.clone(),
            params: vec![0.0; self.params.len()],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn class_count(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn total_planes(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn plane_count(&self, c: usize) -> usize {
        self.offsets[c + 1] - self.offsets[c]
    }

    pub fn plane_counts(&self) -> Vec<usize> {
        self.offsets.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn max_planes(&self) -> usize {
        self.offsets.windows(2).map(|w| w[1] - w[0]).max().unwrap_or(0)
    }

    /// Global plane indices of class `c`.
    pub fn range(&self, c: usize) -> Range<usize> {
        self.offsets[c]..self.offsets[c + 1]
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    /// Owning class of global plane index `k`.
    pub fn class_of(&self, k: usize) -> usize {
        self.offsets.partition_point(|&o| o <= k) - 1
    }

    pub fn weight(&self, k: usize) -> &[f64] {
        &self.params[k * self.dim..(k + 1) * self.dim]
    }

    pub fn weight_mut(&mut self, k: usize) -> &mut [f64] {
        &mut self.params[k * self.dim..(k + 1) * self.dim]
    }

    pub fn weights(&self) -> &[f64] {
        &self.params[..self.total_planes() * self.dim]
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        let n = self.total_planes() * self.dim;
        &mut self.params[..n]
    }

    pub fn biases(&self) -> &[f64] {
        &self.params[self.total_planes() * self.dim..]
    }

    pub fn biases_mut(&mut self) -> &mut [f64] {
        let n = self.total_planes() * self.dim;
        &mut self.params[n..]
    }

    pub fn bias(&self, k: usize) -> f64 {
        self.biases()[k]
    }

    pub fn set_bias(&mut self, k: usize, b: f64) {
        self.biases_mut()[k] = b;
    }

    /// All weights then all biases.
    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn is_finite(&self) -> bool {
        self.params.iter().all(|v| v.is_finite())
    }

    pub(crate) fn ensure_finite(&self, what: &str) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(GmcError::NonFinite(what.into()))
        }
    }

    /// Affine scores `z_k = w_k·φ + b_k` for every plane.
    #[inline]
    pub(crate) fn scores_into(&self, phi: &[f64], z: &mut [f64]) {
        let biases = self.biases();
        for (k, zk) in z.iter_mut().enumerate() {
            let w = self.weight(k);
            let mut acc = 0.0;
            for (a, b) in w.iter().zip(phi) {
                acc += a * b;
            }
            *zk = acc + biases[k];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout() {
        let p = Planes::zeros(3, &[2, 1, 3]).unwrap();
        assert_eq!(p.total_planes(), 6);
        assert_eq!(p.range(2), 3..6);
        assert_eq!(p.params().len(), 6 * 4);
        assert_eq!(p.class_of(0), 0);
        assert_eq!(p.class_of(2), 1);
        assert_eq!(p.class_of(5), 2);
        assert_eq!(p.max_planes(), 3);
    }

    #[test]
    fn rejects_empty_class() {
        assert!(Planes::zeros(2, &[1, 0]).is_err());
        assert!(Planes::zeros(2, &[]).is_err());
        assert!(Planes::from_parts(2, &[1], &[1.0], &[0.0]).is_err());
    }
}
