//! Multi-seed benchmark suite, test-set evaluation and single-threaded
//! latency measurement.

use std::hint::black_box;
use std::io::Write;
use std::time::{Duration, Instant};

use ndarray::{Array2, ArrayView2};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calibration::{accuracy, apply_temperature, ece, macro_f1, DEFAULT_BINS};
use crate::datasets::{stratified_split, Dataset, SplitSpec, SyntheticKind};
use crate::error::{invalid, GmcError, Result};
use crate::features::FeaturePipeline;
use crate::model::{argmax, ForwardScratch, GmcModel, Planes};
use crate::recipe::{fit_recipe, RecipeConfig};
use crate::rng;

/// Metrics of a model on labeled data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestMetrics {
    pub accuracy: f64,
    pub macro_f1: f64,
    pub ece_before: f64,
    /// ECE after temperature scaling, when a temperature is given.
    pub ece_after: Option<f64>,
    pub predictions: Vec<usize>,
}

pub fn evaluate_model(model: &GmcModel, temperature: Option<f64>, data: &Dataset) -> Result<TestMetrics> {
    let scores = model.class_scores(data.features())?;
    let probs = apply_temperature(scores.view(), 1.0)?;
    let predictions: Vec<usize> = probs.rows().into_iter().map(|r| argmax(&r.to_vec())).collect();
    let ece_after = match temperature {
        Some(t) => Some(ece(apply_temperature(scores.view(), t)?.view(), data.labels(), DEFAULT_BINS)?.ece),
        None => None,
    };
    Ok(TestMetrics {
        accuracy: accuracy(&predictions, data.labels())?,
        macro_f1: macro_f1(&predictions, data.labels(), data.class_count())?,
        ece_before: ece(probs.view(), data.labels(), DEFAULT_BINS)?.ece,
        ece_after,
        predictions,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatencyConfig {
    pub warmup_passes: usize,
    pub min_inferences: usize,
    pub time_budget: Duration,
}

impl Default for LatencyConfig {
    fn default() -> Self {
        Self {
            warmup_passes: 5,
            min_inferences: 100_000,
            time_budget: Duration::from_secs(1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Latency {
    pub ns_per_example: f64,
    pub inferences: usize,
}

/// Batch-size-1 forward passes on the calling thread: warm-up passes over
/// `inputs`, then timed passes until `min_inferences` or the time budget.
pub fn measure_latency(model: &GmcModel, inputs: ArrayView2<'_, f64>, cfg: &LatencyConfig) -> Result<Latency> {
    if inputs.nrows() == 0 {
        return Err(invalid("latency needs at least one input"));
    }
    crate::error::check_dim(model.input_dim(), inputs.ncols())?;
    let rows: Vec<Vec<f64>> = inputs.rows().into_iter().map(|r| r.to_vec()).collect();
    let mut scratch = ForwardScratch::for_model(model);
    for _ in 0..cfg.warmup_passes {
        for r in &rows {
            model.forward_into(black_box(r), &mut scratch)?;
            black_box(&scratch.eval.p);
        }
    }
    let mut count = 0;
    let start = Instant::now();
    'timed: loop {
        for r in &rows {
            model.forward_into(black_box(r), &mut scratch)?;
            black_box(&scratch.eval.p);
            count += 1;
        }
        if count >= cfg.min_inferences || start.elapsed() >= cfg.time_budget {
            break 'timed;
        }
    }
    let elapsed = start.elapsed();
    Ok(Latency {
        ns_per_example: elapsed.as_nanos() as f64 / count as f64,
        inferences: count,
    })
}

/// Least-squares line `y = slope·x + intercept` and its R².
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<(f64, f64, f64)> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(invalid("linear fit needs two or more paired points"));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(invalid("linear fit needs distinct x values"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let ss_res: f64 = xs.iter().zip(ys).map(|(x, y)| (y - slope * x - intercept).powi(2)).sum();
    let r2 = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Ok((slope, intercept, r2))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub dim: usize,
    pub total_planes: Vec<usize>,
    /// Interleaved measurement rounds; the median per point is kept.
    pub rounds: usize,
    pub inputs: usize,
    pub latency: LatencyConfig,
    pub seed: u64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            dim: 256,
            total_planes: vec![2, 4, 8, 16],
            rounds: 5,
            inputs: 64,
            latency: LatencyConfig::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingPoint {
    pub total_planes: usize,
    pub ns_per_example: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaneScaling {
    pub dim: usize,
    pub points: Vec<ScalingPoint>,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// A two-class model with `total` planes split evenly, random weights and
/// an identity feature map of width `dim`.
pub fn synthetic_model(dim: usize, total: usize, seed: u64) -> Result<GmcModel> {
    if total < 2 || !total.is_multiple_of(2) {
        return Err(invalid("total planes must be even and >= 2"));
    }
    let mut r = rng::seeded(seed, rng::stream::INIT);
    let mut planes = Planes::zeros(dim, &[total / 2, total / 2])?;
    for p in planes.params_mut() {
        *p = r.random_range(-1.0..1.0) / (dim as f64).sqrt();
    }
    GmcModel::new(FeaturePipeline::identity(dim), planes, 6.0, vec!["0".into(), "1".into()])
}

/// Latency against total plane count at a fixed working dimension.
pub fn plane_scaling_sweep(cfg: &SweepConfig) -> Result<PlaneScaling> {
    let models = cfg
        .total_planes
        .iter()
        .map(|&m| synthetic_model(cfg.dim, m, cfg.seed))
        .collect::<Result<Vec<_>>>()?;
    let mut r = rng::seeded(cfg.seed, rng::stream::DATASET);
    let inputs = Array2::from_shape_fn((cfg.inputs.max(1), cfg.dim), |_| r.random_range(-1.0..1.0));
    let mut samples = vec![Vec::new(); models.len()];
    for _ in 0..cfg.rounds.max(1) {
        for (i, model) in models.iter().enumerate() {
            samples[i].push(measure_latency(model, inputs.view(), &cfg.latency)?.ns_per_example);
        }
    }
    let points: Vec<ScalingPoint> = cfg
        .total_planes
        .iter()
        .zip(samples)
        .map(|(&m, mut s)| {
            s.sort_by(f64::total_cmp);
            ScalingPoint {
                total_planes: m,
                ns_per_example: s[s.len() / 2],
            }
        })
        .collect();
    let xs: Vec<f64> = points.iter().map(|p| p.total_planes as f64).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.ns_per_example).collect();
    let (slope, intercept, r_squared) = linear_fit(&xs, &ys)?;
    Ok(PlaneScaling {
        dim: cfg.dim,
        points,
        slope,
        intercept,
        r_squared,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchSpec {
    pub datasets: Vec<String>,
    pub seeds: Vec<u64>,
    /// Sample count override; `None` uses each generator's default.
    pub size: Option<usize>,
    pub recipe: RecipeConfig,
    pub latency: LatencyConfig,
    pub sweep: Option<SweepConfig>,
}

impl Default for BenchSpec {
    fn default() -> Self {
        Self {
            datasets: SyntheticKind::ALL.iter().map(|k| k.name().to_string()).collect(),
            seeds: vec![0, 1, 2],
            size: None,
            recipe: RecipeConfig::default(),
            latency: LatencyConfig::default(),
            sweep: Some(SweepConfig::default()),
        }
    }
}

/// One (dataset, seed) cell. Metrics are NaN when `error` is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub dataset: String,
    pub seed: u64,
    pub accuracy: f64,
    pub macro_f1: f64,
    pub ece_before: f64,
    pub ece_after: f64,
    pub temperature: f64,
    pub train_seconds: f64,
    pub latency_ns: f64,
    pub lift: String,
    pub init: String,
    pub planes: Vec<usize>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    /// Mean and population standard deviation.
    pub fn of(values: &[f64]) -> Self {
        if values.is_empty() {
            return Self { mean: f64::NAN, std: f64::NAN };
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Self { mean, std: var.sqrt() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchAggregate {
    pub dataset: String,
    pub runs: usize,
    pub failures: usize,
    pub accuracy: MeanStd,
    pub macro_f1: MeanStd,
    pub ece_before: MeanStd,
    pub ece_after: MeanStd,
    pub train_seconds: MeanStd,
    pub latency_ns: MeanStd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    pub aggregates: Vec<BenchAggregate>,
    pub scaling: Option<PlaneScaling>,
}

struct CellFit {
    row: BenchRow,
    model: Option<GmcModel>,
    test: Option<Dataset>,
}

fn run_cell(kind: SyntheticKind, seed: u64, spec: &BenchSpec) -> CellFit {
    let mut row = BenchRow {
        dataset: kind.name().into(),
        seed,
        accuracy: f64::NAN,
        macro_f1: f64::NAN,
        ece_before: f64::NAN,
        ece_after: f64::NAN,
        temperature: f64::NAN,
        train_seconds: f64::NAN,
        latency_ns: f64::NAN,
        lift: String::new(),
        init: String::new(),
        planes: Vec::new(),
        error: None,
    };
    let result = (|| -> Result<(GmcModel, Dataset)> {
        let data = kind.generate(spec.size.unwrap_or(kind.default_size()), seed)?;
        let split = stratified_split(&data, &SplitSpec::standard(seed))?;
        let out = fit_recipe(&split.train, &split.val, &spec.recipe.clone().with_seed(seed))?;
        let t = out.temperature.as_ref().map(|t| t.temperature);
        let m = evaluate_model(&out.model, t, &split.test)?;
        row.accuracy = m.accuracy;
        row.macro_f1 = m.macro_f1;
        row.ece_before = m.ece_before;
        row.ece_after = m.ece_after.unwrap_or(m.ece_before);
        row.temperature = t.unwrap_or(1.0);
        row.train_seconds = out.train_seconds;
        row.lift = out.lift.label();
        row.init = out.init_strategy.name().into();
        row.planes = out.budget.counts().to_vec();
        Ok((out.model, split.test))
    })();
    match result {
        Ok((model, test)) => CellFit {
            row,
            model: Some(model),
            test: Some(test),
        },
        Err(e) => {
            row.error = Some(e.to_string());
            CellFit { row, model: None, test: None }
        }
    }
}

fn aggregate(rows: &[BenchRow], dataset: &str) -> BenchAggregate {
    let ok: Vec<&BenchRow> = rows.iter().filter(|r| r.dataset == dataset && r.error.is_none()).collect();
    let failures = rows.iter().filter(|r| r.dataset == dataset && r.error.is_some()).count();
    let col = |f: fn(&BenchRow) -> f64| MeanStd::of(&ok.iter().map(|r| f(r)).collect::<Vec<_>>());
    BenchAggregate {
        dataset: dataset.into(),
        runs: ok.len(),
        failures,
        accuracy: col(|r| r.accuracy),
        macro_f1: col(|r| r.macro_f1),
        ece_before: col(|r| r.ece_before),
        ece_after: col(|r| r.ece_after),
        train_seconds: col(|r| r.train_seconds),
        latency_ns: col(|r| r.latency_ns),
    }
}

/// Fits every (dataset, seed) cell in parallel, then measures latency one
/// model at a time on the calling thread.
pub fn run_bench(spec: &BenchSpec) -> Result<BenchReport> {
    let kinds = spec
        .datasets
        .iter()
        .map(|d| d.parse::<SyntheticKind>())
        .collect::<Result<Vec<_>>>()?;
    if spec.seeds.is_empty() || kinds.is_empty() {
        return Err(invalid("bench needs at least one dataset and one seed"));
    }
    let cells: Vec<(SyntheticKind, u64)> = kinds
        .iter()
        .flat_map(|&k| spec.seeds.iter().map(move |&s| (k, s)))
        .collect();
    let fits: Vec<CellFit> = cells.par_iter().map(|&(k, s)| run_cell(k, s, spec)).collect();
    let mut rows = Vec::with_capacity(fits.len());
    for mut cell in fits {
        if let (Some(model), Some(test)) = (&cell.model, &cell.test) {
            match measure_latency(model, test.features(), &spec.latency) {
                Ok(l) => cell.row.latency_ns = l.ns_per_example,
                Err(e) => cell.row.error = Some(e.to_string()),
            }
        }
        rows.push(cell.row);
    }
    let mut names: Vec<String> = kinds.iter().map(|k| k.name().to_string()).collect();
    names.dedup();
    let aggregates = names.iter().map(|d| aggregate(&rows, d)).collect();
    let scaling = spec.sweep.as_ref().map(plane_scaling_sweep).transpose()?;
    Ok(BenchReport {
        rows,
        aggregates,
        scaling,
    })
}

impl BenchReport {
    pub fn write_rows_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let err = |e: csv::Error| GmcError::Io(std::io::Error::other(e));
        w.write_record([
            "dataset", "seed", "accuracy", "macro_f1", "ece_before", "ece_after", "temperature", "train_seconds",
            "latency_ns", "lift", "init", "planes", "error",
        ])
        .map_err(err)?;
        for r in &self.rows {
            let planes: Vec<String> = r.planes.iter().map(|m| m.to_string()).collect();
            w.write_record([
                r.dataset.clone(),
                r.seed.to_string(),
                format!("{:?}", r.accuracy),
                format!("{:?}", r.macro_f1),
                format!("{:?}", r.ece_before),
                format!("{:?}", r.ece_after),
                format!("{:?}", r.temperature),
                format!("{:?}", r.train_seconds),
                format!("{:?}", r.latency_ns),
                r.lift.clone(),
                r.init.clone(),
                planes.join(";"),
                r.error.clone().unwrap_or_default(),
            ])
            .map_err(err)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_aggregates_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let err = |e: csv::Error| GmcError::Io(std::io::Error::other(e));
        let metrics = ["accuracy", "macro_f1", "ece_before", "ece_after", "train_seconds", "latency_ns"];
        let mut header = vec!["dataset".to_string(), "runs".into(), "failures".into()];
        for m in metrics {
            header.push(format!("{m}_mean"));
            header.push(format!("{m}_std"));
        }
        w.write_record(&header).map_err(err)?;
        for a in &self.aggregates {
            let mut rec = vec![a.dataset.clone(), a.runs.to_string(), a.failures.to_string()];
            for v in [a.accuracy, a.macro_f1, a.ece_before, a.ece_after, a.train_seconds, a.latency_ns] {
                rec.push(format!("{:?}", v.mean));
                rec.push(format!("{:?}", v.std));
            }
            w.write_record(&rec).map_err(err)?;
        }
        w.flush()?;
        Ok(())
    }
}
