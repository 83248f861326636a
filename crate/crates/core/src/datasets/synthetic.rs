//! Two-dimensional synthetic benchmarks.
//!
//! Each generator is a pure function of its parameters and seed. Rows are
//! emitted class by class; stratified splitting shuffles them later.

use std::f64::consts::PI;
use std::str::FromStr;

use ndarray::Array2;
use rand::Rng;
use rand_distr::StandardNormal;

use super::Dataset;
use crate::error::{invalid, Result};
use crate::rng::{seeded, stream};

/// Blob centres for [`make_aniso_blobs`]: an equilateral triangle with side
/// 2.5 (unit-variance blobs), which puts the Bayes accuracy near 0.82.
pub const ANISO_CENTERS: [[f64; 2]; 3] = [
    [0.0, 1.443_375_672_974_064_4],
    [-1.25, -0.721_687_836_487_032_2],
    [1.25, -0.721_687_836_487_032_2],
];

/// Shear applied to row vectors: `x' = x · ANISO_SHEAR`.
pub const ANISO_SHEAR: [[f64; 2]; 2] = [[0.6, -0.6], [-0.4, 0.8]];

fn linspace(start: f64, end: f64, count: usize) -> impl Iterator<Item = f64> {
    let step = if count > 1 {
        (end - start) / (count - 1) as f64
    } else {
        0.0
    };
    (0..count).map(move |i| start + step * i as f64)
}

fn balanced(n: usize, classes: usize) -> Vec<usize> {
    (0..classes)
        .map(|c| n / classes + usize::from(c < n % classes))
        .collect()
}

fn labels_for(counts: &[usize]) -> Vec<usize> {
    counts
        .iter()
        .enumerate()
        .flat_map(|(c, &k)| std::iter::repeat_n(c, k))
        .collect()
}

fn add_noise(points: &mut Array2<f64>, noise: f64, seed: u64) {
    if noise == 0.0 {
        return;
    }
    let mut rng = seeded(seed, stream::DATASET);
    for v in points.iter_mut() {
        let e: f64 = rng.sample(StandardNormal);
        *v += noise * e;
    }
}

/// Two interleaved half circles. Class 0 is the upper unit arc, class 1 the
/// lower arc shifted to `(1 - cos t, 0.5 - sin t)`.
pub fn make_moons(n: usize, noise: f64, seed: u64) -> Result<Dataset> {
    if n < 2 {
        return Err(invalid(format!("make_moons needs n >= 2, got {n}")));
    }
    if !(noise >= 0.0 && noise.is_finite()) {
        return Err(invalid(format!("noise must be >= 0, got {noise}")));
    }
    let counts = balanced(n, 2);
    let mut x = Array2::zeros((n, 2));
    let mut row = 0;
    for t in linspace(0.0, PI, counts[0]) {
        x[[row, 0]] = t.cos();
        x[[row, 1]] = t.sin();
        row += 1;
    }
    for t in linspace(0.0, PI, counts[1]) {
        x[[row, 0]] = 1.0 - t.cos();
        x[[row, 1]] = 0.5 - t.sin();
        row += 1;
    }
    add_noise(&mut x, noise, seed);
    Dataset::new(x, labels_for(&counts), 2)
}

/// Concentric circles: outer unit circle is class 0, inner circle of
/// radius `radius_ratio` is class 1.
pub fn make_circles(n: usize, radius_ratio: f64, noise: f64, seed: u64) -> Result<Dataset> {
    if n < 2 {
        return Err(invalid(format!("make_circles needs n >= 2, got {n}")));
    }
    if !(radius_ratio > 0.0 && radius_ratio < 1.0) {
        return Err(invalid(format!(
            "radius_ratio must lie in (0, 1), got {radius_ratio}"
        )));
    }
    if !(noise >= 0.0 && noise.is_finite()) {
        return Err(invalid(format!("noise must be >= 0, got {noise}")));
    }
    let counts = balanced(n, 2);
    let mut x = Array2::zeros((n, 2));
    let mut row = 0;
    for (c, &k) in counts.iter().enumerate() {
        let r = if c == 0 { 1.0 } else { radius_ratio };
        for i in 0..k {
            let t = 2.0 * PI * i as f64 / k as f64;
            x[[row, 0]] = r * t.cos();
            x[[row, 1]] = r * t.sin();
            row += 1;
        }
    }
    add_noise(&mut x, noise, seed);
    Dataset::new(x, labels_for(&counts), 2)
}

/// Three unit-variance Gaussian blobs at [`ANISO_CENTERS`], sheared by
/// [`ANISO_SHEAR`].
pub fn make_aniso_blobs(n: usize, seed: u64) -> Result<Dataset> {
    if n < 3 {
        return Err(invalid(format!("make_aniso_blobs needs n >= 3, got {n}")));
    }
    let counts = balanced(n, 3);
    let labels = labels_for(&counts);
    let mut rng = seeded(seed, stream::DATASET);
    let mut x = Array2::zeros((n, 2));
    for (row, &c) in labels.iter().enumerate() {
        let e0: f64 = rng.sample(StandardNormal);
        let e1: f64 = rng.sample(StandardNormal);
        let p = [ANISO_CENTERS[c][0] + e0, ANISO_CENTERS[c][1] + e1];
        x[[row, 0]] = p[0] * ANISO_SHEAR[0][0] + p[1] * ANISO_SHEAR[1][0];
        x[[row, 1]] = p[0] * ANISO_SHEAR[0][1] + p[1] * ANISO_SHEAR[1][1];
    }
    Dataset::new(x, labels, 3)
}

/// Start angle of each spiral arm; keeps the two arms apart at the centre.
const SPIRAL_START: f64 = PI / 2.0;

/// Two interleaved Archimedean spirals `r = θ / 2π`, with θ sweeping
/// `turns` full revolutions from π/2. Class 1 is class 0 rotated by π.
/// Points are evenly spaced in θ and noise free, so `seed` does not affect
/// the output; it is accepted for interface uniformity.
pub fn make_two_spirals(n: usize, turns: f64, seed: u64) -> Result<Dataset> {
    let _ = seed;
    if n < 2 {
        return Err(invalid(format!("make_two_spirals needs n >= 2, got {n}")));
    }
    if !(turns > 0.0 && turns.is_finite()) {
        return Err(invalid(format!("turns must be positive, got {turns}")));
    }
    let counts = balanced(n, 2);
    let mut x = Array2::zeros((n, 2));
    let mut row = 0;
    for (c, &k) in counts.iter().enumerate() {
        let sign = if c == 0 { 1.0 } else { -1.0 };
        for theta in linspace(SPIRAL_START, SPIRAL_START + 2.0 * PI * turns, k) {
            let r = theta / (2.0 * PI);
            x[[row, 0]] = sign * r * theta.cos();
            x[[row, 1]] = sign * r * theta.sin();
            row += 1;
        }
    }
    Dataset::new(x, labels_for(&counts), 2)
}

/// Named generator with the benchmark defaults.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SyntheticKind {
    Moons,
    Circles,
    Aniso,
    Spirals,
}

impl SyntheticKind {
    pub const ALL: [SyntheticKind; 4] = [Self::Moons, Self::Circles, Self::Aniso, Self::Spirals];

    pub fn name(self) -> &'static str {
        match self {
            Self::Moons => "moons",
            Self::Circles => "circles",
            Self::Aniso => "aniso",
            Self::Spirals => "spirals",
        }
    }

    /// Benchmark sample count.
    pub fn default_size(self) -> usize {
        match self {
            Self::Moons | Self::Circles => 4000,
            Self::Aniso => 4500,
            Self::Spirals => 2000,
        }
    }

    pub fn generate(self, n: usize, seed: u64) -> Result<Dataset> {
        let ds = match self {
            Self::Moons => make_moons(n, 0.25, seed),
            Self::Circles => make_circles(n, 0.5, 0.08, seed),
            Self::Aniso => make_aniso_blobs(n, seed),
            Self::Spirals => make_two_spirals(n, 2.0, seed),
        }?;
        ds.with_feature_names(vec!["x0".into(), "x1".into()])
    }
}

impl FromStr for SyntheticKind {
    type Err = crate::GmcError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "moons" => Ok(Self::Moons),
            "circles" => Ok(Self::Circles),
            "aniso" | "aniso_blobs" | "blobs" => Ok(Self::Aniso),
            "spirals" | "two_spirals" => Ok(Self::Spirals),
            other => Err(invalid(format!("unknown dataset `{other}`"))),
        }
    }
}
