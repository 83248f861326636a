use ndarray::{Array2, ArrayView2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::kmeans::kmeans;
use super::silhouette::{distance_matrix, silhouette_from_distances};
use crate::error::{check_dim, invalid, Result};
use crate::rng;

/// Minimum silhouette for a class to receive more than one plane.
pub const SILHOUETTE_THRESHOLD: f64 = 0.37;
/// Silhouette is evaluated on at most this many points per class.
pub const SILHOUETTE_SAMPLE: usize = 500;
pub const DEFAULT_CAP: usize = 4;

/// Per-class plane counts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlaneBudget {
    counts: Vec<usize>,
    cap: usize,
}

impl PlaneBudget {
    pub fn new(counts: Vec<usize>, cap: usize) -> Result<Self> {
        if counts.is_empty() {
            return Err(invalid("budget needs at least one class"));
        }
        if let Some(c) = counts.iter().position(|&m| m == 0 || m > cap) {
            return Err(invalid(format!("class {c}: need 1 <= M_c <= cap={cap}, got {}", counts[c])));
        }
        Ok(Self { counts, cap })
    }

    /// `m` planes for every class.
    pub fn uniform(class_count: usize, m: usize) -> Result<Self> {
        Self::new(vec![m; class_count], m.max(1))
    }

    /// Silhouette-driven counts, one class at a time in parallel.
    pub fn auto(features: ArrayView2<'_, f64>, labels: &[usize], class_count: usize, cap: usize, seed: u64) -> Result<Self> {
        let counts = scan_classes(features, labels, class_count, cap, seed)?
            .into_iter()
            .map(|s| s.chosen)
            .collect();
        Self::new(counts, cap.max(1))
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    pub fn class_count(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }
}

/// Silhouette scores for each candidate `k` and the resulting choice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetScan {
    pub chosen: usize,
    pub scores: Vec<(usize, f64)>,
}

/// Number of planes for one class: the `k` in `2..=min(cap, n-1)` with the
/// best silhouette if that clears [`SILHOUETTE_THRESHOLD`], otherwise 1.
pub fn auto_plane_budget(class_points: ArrayView2<'_, f64>, cap: usize, seed: u64) -> usize {
    scan_plane_budget(class_points, cap, seed).chosen
}

pub fn scan_plane_budget(class_points: ArrayView2<'_, f64>, cap: usize, seed: u64) -> BudgetScan {
    let n = class_points.nrows();
    let single = BudgetScan { chosen: 1, scores: Vec::new() };
    if cap < 2 || n < 2 * cap || class_points.iter().any(|v| !v.is_finite()) {
        return single;
    }
    let sample = subsample(n, seed);
    let dist = distance_matrix(class_points.select(Axis(0), &sample).view());
    let mut scores = Vec::new();
    for k in 2..=cap.min(n - 1) {
        let Ok(km) = kmeans(class_points, k, rng::derive(seed, k as u64)) else {
            continue;
        };
        let assigned: Vec<usize> = sample.iter().map(|&i| km.assignments[i]).collect();
        if let Ok(s) = silhouette_from_distances(&dist, &assigned) {
            scores.push((k, s));
        }
    }
    let best = scores
        .iter()
        .fold(None, |acc: Option<(usize, f64)>, &(k, s)| match acc {
            Some((_, bs)) if bs >= s => acc,
            _ => Some((k, s)),
        });
    let chosen = match best {
        Some((k, s)) if s >= SILHOUETTE_THRESHOLD => k,
        _ => 1,
    };
    BudgetScan { chosen, scores }
}

/// Sorted row indices used for silhouette evaluation.
pub(crate) fn subsample(n: usize, seed: u64) -> Vec<usize> {
    if n <= SILHOUETTE_SAMPLE {
        return (0..n).collect();
    }
    let mut r = rng::seeded(seed, rng::stream::BUDGET);
    let mut idx = rand::seq::index::sample(&mut r, n, SILHOUETTE_SAMPLE).into_vec();
    idx.sort_unstable();
    idx
}

pub(crate) fn class_rows(features: ArrayView2<'_, f64>, labels: &[usize], c: usize) -> Array2<f64> {
    let idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
    features.select(Axis(0), &idx)
}

pub fn scan_classes(
    features: ArrayView2<'_, f64>,
    labels: &[usize],
    class_count: usize,
    cap: usize,
    seed: u64,
) -> Result<Vec<BudgetScan>> {
    check_dim(features.nrows(), labels.len())?;
    if cap == 0 {
        return Err(invalid("plane cap must be >= 1"));
    }
    if let Some(&y) = labels.iter().find(|&&y| y >= class_count) {
        return Err(invalid(format!("label {y} out of range for {class_count} classes")));
    }
    Ok((0..class_count)
        .into_par_iter()
        .map(|c| {
            let pts = class_rows(features, labels, c);
            scan_plane_budget(pts.view(), cap, rng::derive(seed, c as u64))
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn blobs(centers: &[(f64, f64)], per: usize, spread: f64, seed: u64) -> Array2<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut v = Vec::new();
        for &(cx, cy) in centers {
            for _ in 0..per {
                let dx: f64 = StandardNormal.sample(&mut rng);
                let dy: f64 = StandardNormal.sample(&mut rng);
                v.extend([cx + spread * dx, cy + spread * dy]);
            }
        }
        Array2::from_shape_vec((centers.len() * per, 2), v).unwrap()
    }

    #[test]
    fn single_blob_gets_one_plane() {
        for seed in 0..5 {
            let p = blobs(&[(0.0, 0.0)], 300, 1.0, seed);
            assert_eq!(auto_plane_budget(p.view(), 4, seed), 1, "seed {seed}");
        }
    }

    #[test]
    fn two_clusters_get_two_planes() {
        let p = blobs(&[(0.0, 0.0), (8.0, 0.0)], 100, 0.5, 1);
        assert_eq!(auto_plane_budget(p.view(), 4, 0), 2);
    }

    #[test]
    fn five_clusters_are_capped() {
        let c = [(0.0, 0.0), (10.0, 0.0), (0.0, 10.0), (10.0, 10.0), (5.0, 20.0)];
        let p = blobs(&c, 40, 0.3, 2);
        assert_eq!(auto_plane_budget(p.view(), 4, 0), 4);
    }

    #[test]
    fn small_classes_get_one_plane() {
        let p = blobs(&[(0.0, 0.0), (8.0, 0.0)], 3, 0.1, 3);
        assert_eq!(auto_plane_budget(p.view(), 4, 0), 1);
        assert_eq!(auto_plane_budget(p.view(), 1, 0), 1);
    }

    #[test]
    fn deterministic_and_subsampled() {
        let p = blobs(&[(0.0, 0.0), (6.0, 0.0)], 400, 0.7, 4);
        let a = scan_plane_budget(p.view(), 3, 11);
        assert_eq!(a, scan_plane_budget(p.view(), 3, 11));
        assert_eq!(a.chosen, 2);
        assert_eq!(subsample(800, 11).len(), SILHOUETTE_SAMPLE);
    }

    #[test]
    fn budget_validation() {
        assert!(PlaneBudget::new(vec![1, 5], 4).is_err());
        assert!(PlaneBudget::new(vec![0, 1], 4).is_err());
        let b = PlaneBudget::uniform(3, 2).unwrap();
        assert_eq!(b.total(), 6);
    }
}
