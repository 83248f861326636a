use ndarray::{Array2, ArrayView1, ArrayView2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, GmcError, Result};
use crate::rng;

const MAX_ITERATIONS: usize = 100;
const SHIFT_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeansResult {
    /// `k × d` cluster centers.
    pub centers: Array2<f64>,
    pub assignments: Vec<usize>,
    /// Sum of squared distances to assigned centers.
    pub inertia: f64,
    /// Number of empty-cluster reseeds performed.
    pub reseeds: usize,
    pub iterations: usize,
    /// Inertia after each assignment step.
    pub inertia_trace: Vec<f64>,
}

pub(crate) fn sq_dist(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Lloyd's algorithm with k-means++ seeding. Empty clusters are re-seeded
/// at the point farthest from its current center.
pub fn kmeans(points: ArrayView2<'_, f64>, k: usize, seed: u64) -> Result<KMeansResult> {
    let n = points.nrows();
    if k == 0 || n < k {
        return Err(invalid(format!("k-means needs 1 <= k <= n, got k={k}, n={n}")));
    }
    if points.iter().any(|v| !v.is_finite()) {
        return Err(GmcError::NonFinite("k-means input".into()));
    }
    let mut rng = rng::seeded(seed, rng::stream::KMEANS);
    let mut centers = plus_plus(points, k, &mut rng);
    let mut assignments = vec![0; n];
    let mut dists = vec![0.0; n];
    let mut reseeds = 0;
    let mut trace = Vec::new();
    let mut iterations = 0;

    loop {
        reseeds += assign(points, &mut centers, &mut assignments, &mut dists);
        trace.push(dists.iter().sum());
        if iterations == MAX_ITERATIONS {
            break;
        }
        iterations += 1;
        let next = means(points, &assignments, k);
        let shift = (0..k)
            .map(|j| sq_dist(next.row(j), centers.row(j)).sqrt())
            .fold(0.0, f64::max);
        centers = next;
        if shift < SHIFT_TOLERANCE {
            reseeds += assign(points, &mut centers, &mut assignments, &mut dists);
            trace.push(dists.iter().sum());
            break;
        }
    }
    Ok(KMeansResult {
        centers,
        assignments,
        inertia: *trace.last().unwrap(),
        reseeds,
        iterations,
        inertia_trace: trace,
    })
}

fn plus_plus(points: ArrayView2<'_, f64>, k: usize, rng: &mut impl Rng) -> Array2<f64> {
    let n = points.nrows();
    let mut centers = Array2::zeros((k, points.ncols()));
    let first = rng.random_range(0..n);
    centers.row_mut(0).assign(&points.row(first));
    let mut d2: Vec<f64> = (0..n).map(|i| sq_dist(points.row(i), centers.row(0))).collect();
    for j in 1..k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &d) in d2.iter().enumerate() {
                if target < d {
                    chosen = i;
                    break;
                }
                target -= d;
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        centers.row_mut(j).assign(&points.row(pick));
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(sq_dist(points.row(i), centers.row(j)));
        }
    }
    centers
}

/// Nearest-center assignment (ties to the lower index), then repairs
/// empty clusters by moving their center onto the farthest point.
/// Returns the number of reseeds.
fn assign(points: ArrayView2<'_, f64>, centers: &mut Array2<f64>, assignments: &mut [usize], dists: &mut [f64]) -> usize {
    let k = centers.nrows();
    let mut sizes = vec![0usize; k];
    for i in 0..points.nrows() {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for j in 0..k {
            let d = sq_dist(points.row(i), centers.row(j));
            if d < best_d {
                best = j;
                best_d = d;
            }
        }
        assignments[i] = best;
        dists[i] = best_d;
        sizes[best] += 1;
    }
    let mut reseeds = 0;
    while let Some(empty) = sizes.iter().position(|&s| s == 0) {
        let far = (0..points.nrows())
            .filter(|&i| sizes[assignments[i]] > 1)
            .fold(None, |acc: Option<usize>, i| match acc {
                Some(b) if dists[b] >= dists[i] => Some(b),
                _ => Some(i),
            })
            .expect("n >= k guarantees a cluster with two members");
        sizes[assignments[far]] -= 1;
        assignments[far] = empty;
        centers.row_mut(empty).assign(&points.row(far));
        dists[far] = 0.0;
        sizes[empty] = 1;
        reseeds += 1;
    }
    reseeds
}

fn means(points: ArrayView2<'_, f64>, assignments: &[usize], k: usize) -> Array2<f64> {
    let mut sums = Array2::zeros((k, points.ncols()));
    let mut counts = vec![0usize; k];
    for (i, &a) in assignments.iter().enumerate() {
        let mut row = sums.row_mut(a);
        row += &points.row(i);
        counts[a] += 1;
    }
    for (j, &c) in counts.iter().enumerate() {
        sums.row_mut(j).mapv_inplace(|v| v / c as f64);
    }
    sums
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;

    fn inertia_of(points: ArrayView2<'_, f64>, r: &KMeansResult) -> f64 {
        r.assignments
            .iter()
            .enumerate()
            .map(|(i, &a)| sq_dist(points.row(i), r.centers.row(a)))
            .sum()
    }

    #[test]
    fn single_cluster_is_the_mean() {
        let p = array![[0.0, 0.0], [2.0, 0.0], [1.0, 3.0]];
        let r = kmeans(p.view(), 1, 0).unwrap();
        assert!((r.centers[[0, 0]] - 1.0).abs() < 1e-12);
        assert!((r.centers[[0, 1]] - 1.0).abs() < 1e-12);
        // total variance · n = Σ ‖x - mean‖²
        assert!((r.inertia - (1.0 + 1.0 + 1.0 + 1.0 + 0.0 + 4.0)).abs() < 1e-12);
    }

    #[test]
    fn separated_pairs_match_exhaustive_oracle() {
        let p = array![[0.0, 0.0], [0.0, 1.0], [10.0, 0.0], [10.0, 1.0]];
        // Oracle: best of all 2-partitions.
        let mut best = f64::INFINITY;
        for mask in 1u32..(1 << 4) - 1 {
            let mut total = 0.0;
            for side in [true, false] {
                let idx: Vec<usize> = (0..4).filter(|&i| ((mask >> i) & 1 == 1) == side).collect();
                let m0 = idx.iter().map(|&i| p[[i, 0]]).sum::<f64>() / idx.len() as f64;
                let m1 = idx.iter().map(|&i| p[[i, 1]]).sum::<f64>() / idx.len() as f64;
                total += idx.iter().map(|&i| (p[[i, 0]] - m0).powi(2) + (p[[i, 1]] - m1).powi(2)).sum::<f64>();
            }
            best = best.min(total);
        }
        for seed in 0..10 {
            let r = kmeans(p.view(), 2, seed).unwrap();
            assert!((r.inertia - best).abs() < 1e-12, "seed {seed}");
            let mut c: Vec<(f64, f64)> = (0..2).map(|j| (r.centers[[j, 0]], r.centers[[j, 1]])).collect();
            c.sort_by(|a, b| a.0.total_cmp(&b.0));
            assert_eq!(c, vec![(0.0, 0.5), (10.0, 0.5)]);
        }
    }

    #[test]
    fn k_equals_n_has_zero_inertia() {
        let p = array![[0.0], [1.0], [5.0], [7.0]];
        let r = kmeans(p.view(), 4, 3).unwrap();
        assert_eq!(r.inertia, 0.0);
    }

    #[test]
    fn identical_points_force_reseeds() {
        let p = Array2::from_elem((6, 2), 1.5);
        let r = kmeans(p.view(), 3, 0).unwrap();
        assert!(r.reseeds > 0);
        let mut sizes = [0; 3];
        for &a in &r.assignments {
            sizes[a] += 1;
        }
        assert!(sizes.iter().all(|&s| s > 0));
    }

    #[test]
    fn rejects_too_few_points() {
        let p = array![[0.0], [1.0]];
        assert!(kmeans(p.view(), 3, 0).is_err());
        assert!(kmeans(p.view(), 0, 0).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn lloyd_invariants(
            raw in prop::collection::vec(-5.0f64..5.0, 6..80),
            k in 1usize..5,
            seed in 0u64..1000,
        ) {
            let n = raw.len() / 2;
            prop_assume!(n >= k);
            let p = Array2::from_shape_vec((n, 2), raw[..2 * n].to_vec()).unwrap();
            let r = kmeans(p.view(), k, seed).unwrap();
            for w in r.inertia_trace.windows(2) {
                prop_assert!(w[1] <= w[0] + 1e-9 * w[0].max(1.0));
            }
            prop_assert!((r.inertia - inertia_of(p.view(), &r)).abs() <= 1e-9 * r.inertia.max(1.0));
            let mut sizes = vec![0; k];
            for &a in &r.assignments { sizes[a] += 1; }
            prop_assert!(sizes.iter().all(|&s| s > 0));
            prop_assert_eq!(&r, &kmeans(p.view(), k, seed).unwrap());
        }
    }
}
