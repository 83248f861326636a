use std::f64::consts::TAU;

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, invalid, Result};
use crate::rng::{seeded, stream};

/// Random Fourier feature lift
/// `φ(x) = sqrt(2/D) [cos(Ωᵀx + b); sin(Ωᵀx + b)]` with `Ω ~ N(0, 2γI)` and
/// `b ~ U[0, 2π)`.
///
/// Because both the cosine and sine halves are kept at scale `sqrt(2/D)`,
/// `φ(x)·φ(y)` estimates `2·exp(-γ‖x − y‖²)` and `‖φ(x)‖² = 2` exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RffMap {
    /// `D × d_in`; row `j` is the frequency vector `ω_j`.
    pub omega: Array2<f64>,
    /// Length `D`, each in `[0, 2π)`.
    pub phases: Array1<f64>,
    pub gamma: f64,
}

impl RffMap {
    pub fn sample(d_in: usize, features: usize, gamma: f64, seed: u64) -> Result<Self> {
        if features == 0 {
            return Err(invalid("RFF dimension D must be at least 1"));
        }
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(invalid(format!("RFF gamma must be positive, got {gamma}")));
        }
        let mut rng = seeded(seed, stream::RFF);
        let normal = Normal::new(0.0, (2.0 * gamma).sqrt()).expect("valid std");
        let omega = Array2::from_shape_simple_fn((features, d_in), || normal.sample(&mut rng));
        let phases = Array1::from_shape_simple_fn(features, || rng.random_range(0.0..TAU));
        Ok(Self {
            omega,
            phases,
            gamma,
        })
    }

    /// Number of frequency vectors `D`.
    pub fn features(&self) -> usize {
        self.omega.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.omega.ncols()
    }

    pub fn output_dim(&self) -> usize {
        2 * self.features()
    }

    pub fn transform_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        check_dim(self.input_dim(), x.len())?;
        check_dim(self.output_dim(), out.len())?;
        let d = self.features();
        let scale = (2.0 / d as f64).sqrt();
        let (cos_half, sin_half) = out.split_at_mut(d);
        for (j, (w, b)) in self.omega.rows().into_iter().zip(&self.phases).enumerate() {
            let arg = w.iter().zip(x).map(|(a, v)| a * v).sum::<f64>() + b;
            let (s, c) = arg.sin_cos();
            cos_half[j] = scale * c;
            sin_half[j] = scale * s;
        }
        Ok(())
    }

    pub fn transform(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.output_dim()];
        self.transform_into(x, &mut out)?;
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn frequency_variance_matches_two_gamma() {
        let m = RffMap::sample(2, 1024, 1.0, 0).unwrap();
        let n = m.omega.len() as f64;
        let mean = m.omega.sum() / n;
        let var = m.omega.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((var - 2.0).abs() < 0.2, "{var}");
        assert!(m.phases.iter().all(|&b| (0.0..TAU).contains(&b)));
    }

    #[test]
    fn deterministic_and_validated() {
        assert_eq!(RffMap::sample(3, 8, 0.5, 9).unwrap(), RffMap::sample(3, 8, 0.5, 9).unwrap());
        assert!(RffMap::sample(3, 8, 0.0, 9).is_err());
        assert!(RffMap::sample(3, 0, 1.0, 9).is_err());
    }

    #[test]
    fn zero_frequency() {
        let m = RffMap {
            omega: array![[0.0, 0.0]],
            phases: array![0.0],
            gamma: 1.0,
        };
        let phi = m.transform(&[3.0, -7.0]).unwrap();
        assert!((phi[0] - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(phi[1], 0.0);
    }

    #[test]
    fn squared_norm_is_two() {
        let m = RffMap::sample(4, 300, 2.0, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let x: Vec<f64> = (0..4).map(|_| rng.random_range(-5.0..5.0)).collect();
            let phi = m.transform(&x).unwrap();
            let sq: f64 = phi.iter().map(|v| v * v).sum();
            assert!((sq - 2.0).abs() < 1e-12);
        }
        assert!(m.transform(&[1.0]).is_err());
    }

    #[test]
    fn approximates_twice_the_rbf_kernel() {
        let gamma = 0.5;
        let m = RffMap::sample(2, 4096, gamma, 11).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let mut err = 0.0;
        for _ in 0..100 {
            let x = [rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5)];
            let y = [rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5)];
            let dot: f64 = m.transform(&x).unwrap().iter().zip(m.transform(&y).unwrap()).map(|(a, b)| a * b).sum();
            let d2 = (x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2);
            err += (dot - 2.0 * (-gamma * d2).exp()).abs();
        }
        assert!(err / 100.0 <= 0.1, "{}", err / 100.0);
    }
}
