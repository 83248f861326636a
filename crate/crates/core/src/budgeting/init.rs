use std::str::FromStr;

use ndarray::{Array1, ArrayView2, Axis};
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::budget::{class_rows, subsample, PlaneBudget};
use super::kmeans::{kmeans, KMeansResult};
use super::silhouette::{distance_matrix, silhouette_from_distances};
use crate::error::{check_dim, invalid, GmcError, Result};
use crate::model::Planes;
use crate::rng;
use crate::training::{fit_planes, TrainConfig};

const KAPPA: f64 = 1.0;
const DEGENERATE: f64 = 1e-9;
const RANDOM_STD: f64 = 0.01;
const MAX_RESEEDS: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum InitStrategy {
    Kmeans,
    Logreg,
    Random,
    #[default]
    Auto,
}

impl InitStrategy {
    pub fn name(self) -> &'static str {
        match self {
            Self::Kmeans => "kmeans",
            Self::Logreg => "logreg",
            Self::Random => "random",
            Self::Auto => "auto",
        }
    }
}

impl FromStr for InitStrategy {
    type Err = GmcError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kmeans" => Ok(Self::Kmeans),
            "logreg" => Ok(Self::Logreg),
            "random" => Ok(Self::Random),
            "auto" => Ok(Self::Auto),
            other => Err(invalid(format!("unknown init strategy `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitSpec {
    pub strategy: InitStrategy,
    /// Replica noise for logistic seeds, relative to the seed's norm.
    pub noise_scale: f64,
    pub seed: u64,
}

impl Default for InitSpec {
    fn default() -> Self {
        Self {
            strategy: InitStrategy::Auto,
            noise_scale: 0.05,
            seed: 0,
        }
    }
}

/// Initial parameters and the strategy that produced them.
#[derive(Debug, Clone)]
pub struct Initialization {
    pub planes: Planes,
    pub strategy: InitStrategy,
}

pub fn initialize(features: ArrayView2<'_, f64>, labels: &[usize], budget: &PlaneBudget, spec: &InitSpec) -> Result<Initialization> {
    if !(spec.noise_scale >= 0.0) {
        return Err(invalid("noise_scale must be >= 0"));
    }
    let planes = match spec.strategy {
        InitStrategy::Kmeans => init_kmeans(features, labels, budget, spec.seed)?,
        InitStrategy::Logreg => init_logreg(features, labels, budget, spec.noise_scale, spec.seed)?,
        InitStrategy::Random => init_random(features.ncols(), budget, spec.seed)?,
        InitStrategy::Auto => return init_auto(features, labels, budget, spec.noise_scale, spec.seed),
    };
    Ok(Initialization {
        planes,
        strategy: spec.strategy,
    })
}

struct ClassClusters {
    km: KMeansResult,
    silhouette: Option<f64>,
}

fn cluster_classes(features: ArrayView2<'_, f64>, labels: &[usize], budget: &PlaneBudget, seed: u64) -> Result<Vec<ClassClusters>> {
    check_dim(features.nrows(), labels.len())?;
    (0..budget.class_count())
        .into_par_iter()
        .map(|c| {
            let pts = class_rows(features, labels, c);
            let m = budget.counts()[c];
            let class_seed = rng::derive(seed, c as u64);
            let km = kmeans(pts.view(), m, class_seed)
                .map_err(|e| invalid(format!("class {c}: {e}")))?;
            let silhouette = if m >= 2 && pts.nrows() >= 3 {
                let idx = subsample(pts.nrows(), class_seed);
                let dist = distance_matrix(pts.select(Axis(0), &idx).view());
                let assigned: Vec<usize> = idx.iter().map(|&i| km.assignments[i]).collect();
                silhouette_from_distances(&dist, &assigned).ok()
            } else {
                None
            };
            Ok(ClassClusters { km, silhouette })
        })
        .collect()
}

fn random_unit(dim: usize, rng: &mut impl Rng) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// Planes from k-means centers plus a flag for whether any center fell
/// back to a random direction.
fn planes_from_clusters(
    features: ArrayView2<'_, f64>,
    budget: &PlaneBudget,
    clusters: &[ClassClusters],
    seed: u64,
) -> Result<(Planes, bool)> {
    let dim = features.ncols();
    let mean: Array1<f64> = features
        .mean_axis(Axis(0))
        .ok_or_else(|| invalid("no training rows"))?;
    let mut planes = Planes::zeros(dim, budget.counts())?;
    let mut rng = rng::seeded(seed, rng::stream::INIT);
    let mut degenerate = false;
    for (c, cl) in clusters.iter().enumerate() {
        for (j, k) in planes.range(c).enumerate() {
            let diff = &cl.km.centers.row(j) - &mean;
            let norm = diff.dot(&diff).sqrt();
            let w: Vec<f64> = if norm < DEGENERATE {
                degenerate = true;
                random_unit(dim, &mut rng)
            } else {
                diff.iter().map(|v| KAPPA * v / norm).collect()
            };
            let b = -w.iter().zip(mean.iter()).map(|(a, m)| a * m).sum::<f64>();
            planes.weight_mut(k).copy_from_slice(&w);
            planes.set_bias(k, b);
        }
    }
    Ok((planes, degenerate))
}

/// Orients each plane from the global mean toward one k-means center of
/// its class: `w = κ (μ - μ̄) / ‖μ - μ̄‖`, `b = -w·μ̄`.
pub fn init_kmeans(features: ArrayView2<'_, f64>, labels: &[usize], budget: &PlaneBudget, seed: u64) -> Result<Planes> {
    let clusters = cluster_classes(features, labels, budget, seed)?;
    Ok(planes_from_clusters(features, budget, &clusters, seed)?.0)
}

fn logreg_config() -> TrainConfig {
    TrainConfig {
        alpha_start: 1.0,
        alpha_end: 1.0,
        lambda: 1e-4,
        beta: 0.0,
        label_smoothing: 0.0,
        batch_size: usize::MAX,
        learning_rate: 0.05,
        max_epochs: 100,
        patience: 100,
        ..TrainConfig::default()
    }
}

/// One-vs-rest logistic direction per class, replicated `M_c` times with
/// Gaussian noise of std `noise_scale·‖w‖`.
pub fn init_logreg(
    features: ArrayView2<'_, f64>,
    labels: &[usize],
    budget: &PlaneBudget,
    noise_scale: f64,
    seed: u64,
) -> Result<Planes> {
    check_dim(features.nrows(), labels.len())?;
    let classes = budget.class_count();
    if classes < 2 {
        return Err(invalid("logistic initialization needs at least two classes"));
    }
    if !(noise_scale >= 0.0) {
        return Err(invalid("noise_scale must be >= 0"));
    }
    let mut cfg = logreg_config();
    cfg.batch_size = labels.len().max(1);
    let dim = features.ncols();
    let seeds: Vec<(Vec<f64>, f64)> = (0..classes)
        .into_par_iter()
        .map(|c| {
            let binary: Vec<usize> = labels.iter().map(|&y| usize::from(y == c)).collect();
            if !binary.contains(&1) || !binary.contains(&0) {
                return Err(invalid(format!("class {c} lacks positives or negatives")));
            }
            let (fitted, log) = fit_planes(features, &binary, features, &binary, Planes::zeros(dim, &[1, 1])?, &cfg)?;
            if log.diverged {
                return Err(GmcError::Diverged { epoch: log.epochs.len() });
            }
            let w: Vec<f64> = fitted.weight(1).iter().zip(fitted.weight(0)).map(|(a, b)| a - b).collect();
            let b = fitted.bias(1) - fitted.bias(0);
            let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm < DEGENERATE {
                return Err(invalid(format!("class {c}: logistic direction vanished")));
            }
            Ok((w, b))
        })
        .collect::<Result<_>>()?;

    let mut planes = Planes::zeros(dim, budget.counts())?;
    let mut rng = rng::seeded(seed, rng::stream::INIT);
    for (c, (w, b)) in seeds.iter().enumerate() {
        let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
        let noise = Normal::new(0.0, noise_scale * norm).map_err(|e| invalid(e.to_string()))?;
        for k in planes.range(c) {
            for (dst, &src) in planes.weight_mut(k).iter_mut().zip(w) {
                *dst = src + if noise_scale > 0.0 { noise.sample(&mut rng) } else { 0.0 };
            }
            planes.set_bias(k, *b);
        }
    }
    Ok(planes)
}

/// Gaussian weights with std 0.01 and zero biases.
pub fn init_random(dim: usize, budget: &PlaneBudget, seed: u64) -> Result<Planes> {
    let mut planes = Planes::zeros(dim, budget.counts())?;
    let mut rng = rng::seeded(seed, rng::stream::INIT);
    let normal = Normal::new(0.0, RANDOM_STD).expect("valid std");
    for w in planes.weights_mut() {
        *w = normal.sample(&mut rng);
    }
    Ok(planes)
}

/// k-means, unless clustering looks unstable for some class (more than two
/// empty-cluster reseeds, negative silhouette, or a center at the global
/// mean); then logistic seeds; then random.
pub fn init_auto(
    features: ArrayView2<'_, f64>,
    labels: &[usize],
    budget: &PlaneBudget,
    noise_scale: f64,
    seed: u64,
) -> Result<Initialization> {
    check_dim(features.nrows(), labels.len())?;
    if let Ok(clusters) = cluster_classes(features, labels, budget, seed) {
        let unstable = clusters
            .iter()
            .any(|cl| cl.km.reseeds > MAX_RESEEDS || cl.silhouette.is_some_and(|s| s < 0.0));
        if !unstable {
            let (planes, degenerate) = planes_from_clusters(features, budget, &clusters, seed)?;
            if !degenerate {
                return Ok(Initialization {
                    planes,
                    strategy: InitStrategy::Kmeans,
                });
            }
        }
    }
    if let Ok(planes) = init_logreg(features, labels, budget, noise_scale, seed) {
        return Ok(Initialization {
            planes,
            strategy: InitStrategy::Logreg,
        });
    }
    Ok(Initialization {
        planes: init_random(features.ncols(), budget, seed)?,
        strategy: InitStrategy::Random,
    })
}
