use ndarray::ArrayView2;

use super::kmeans::sq_dist;
use crate::error::{check_dim, invalid, Result};

/// Full `n × n` Euclidean distance matrix, row-major.
pub fn distance_matrix(points: ArrayView2<'_, f64>) -> Vec<f64> {
    let n = points.nrows();
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let v = sq_dist(points.row(i), points.row(j)).sqrt();
            d[i * n + j] = v;
            d[j * n + i] = v;
        }
    }
    d
}

/// Mean silhouette `(b - a) / max(a, b)` over all points. Points in
/// singleton clusters contribute 0.
pub fn silhouette(points: ArrayView2<'_, f64>, assignments: &[usize]) -> Result<f64> {
    check_dim(points.nrows(), assignments.len())?;
    silhouette_from_distances(&distance_matrix(points), assignments)
}

/// Silhouette from a precomputed row-major distance matrix.
pub fn silhouette_from_distances(dist: &[f64], assignments: &[usize]) -> Result<f64> {
    let n = assignments.len();
    check_dim(n * n, dist.len())?;
    let k = assignments.iter().max().map_or(0, |m| m + 1);
    let mut sizes = vec![0usize; k];
    for &a in assignments {
        sizes[a] += 1;
    }
    if sizes.iter().filter(|&&s| s > 0).count() < 2 {
        return Err(invalid("silhouette needs at least two non-empty clusters"));
    }
    let mut sums = vec![0.0; k];
    let mut total = 0.0;
    for i in 0..n {
        let own = assignments[i];
        if sizes[own] == 1 {
            continue;
        }
        sums.fill(0.0);
        for j in 0..n {
            sums[assignments[j]] += dist[i * n + j];
        }
        let a = sums[own] / (sizes[own] - 1) as f64;
        let b = (0..k)
            .filter(|&c| c != own && sizes[c] > 0)
            .map(|c| sums[c] / sizes[c] as f64)
            .fold(f64::INFINITY, f64::min);
        let m = a.max(b);
        if m > 0.0 {
            total += (b - a) / m;
        }
    }
    Ok(total / n as f64)
}
