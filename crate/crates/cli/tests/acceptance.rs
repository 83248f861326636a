//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::collections::HashMap;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use gmc::budgeting::InitStrategy;
use gmc::calibration::{apply_temperature, ece, DEFAULT_BINS};
use gmc::datasets::{stratified_split, SyntheticKind};
use gmc::diagnostics::{plane_usage, responsibility_stats};
use gmc::features::RffMap;
use gmc::harness::{evaluate_model, plane_scaling_sweep, SweepConfig};
use gmc::model::{argmax, class_score, responsibilities};
use gmc::training::{gradients, gradients_with_coefficients, total_loss, usage_coefficients, Batch, UsageTracker};
use gmc::{fit_recipe, Dataset, LiftMode, Planes, PlanesSpec, RecipeConfig, SplitSpec, TrainConfig};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

const SEEDS: [u64; 3] = [0, 1, 2];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn list(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>().join(", ")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Variant {
    Default,
    /// Linear lift with one plane per class.
    LinearOnly,
    /// Linear lift with the automatic plane budget.
    LinearPlanes,
    FixedAlpha,
    NoUsagePenalty,
    RandomInit,
}

impl Variant {
    fn recipe(self) -> RecipeConfig {
        let mut cfg = RecipeConfig::default();
        match self {
            Variant::Default => {}
            Variant::LinearOnly => {
                cfg.lift = LiftMode::Linear;
                cfg.planes = PlanesSpec::Fixed { per_class: 1 };
            }
            Variant::LinearPlanes => cfg.lift = LiftMode::Linear,
            Variant::FixedAlpha => {
                cfg.train.alpha_start = 6.0;
                cfg.train.alpha_end = 6.0;
            }
            Variant::NoUsagePenalty => cfg.train.beta = 0.0,
            Variant::RandomInit => cfg.init = InitStrategy::Random,
        }
        cfg
    }
}

#[derive(Debug, Clone)]
struct Run {
    accuracy: f64,
    ece_before: f64,
    ece_after: f64,
    lifted: bool,
    lift: String,
    planes: Vec<usize>,
    maxresp: f64,
    resp_entropy: f64,
    /// Largest deviation of a plane-usage row from 100%.
    usage_row_error: f64,
    /// Argmax of temperature-scaled probabilities equals the raw argmax.
    argmax_preserved: bool,
    seconds: f64,
}

fn run(kind: SyntheticKind, variant: Variant, seed: u64) -> Run {
    let start = Instant::now();
    let data = kind.generate(kind.default_size(), seed).unwrap();
    let split = stratified_split(&data, &SplitSpec::standard(seed)).unwrap();
    let out = fit_recipe(&split.train, &split.val, &variant.recipe().with_seed(seed)).unwrap();
    let t = out.temperature.as_ref().map(|t| t.temperature).unwrap();
    let test = &split.test;
    let m = evaluate_model(&out.model, Some(t), test).unwrap();
    let scores = out.model.class_scores(test.features()).unwrap();
    let scaled = apply_temperature(scores.view(), t).unwrap();
    let argmax_preserved = scaled
        .rows()
        .into_iter()
        .zip(&m.predictions)
        .all(|(r, &p)| argmax(&r.to_vec()) == p);
    let stats = responsibility_stats(&out.model, test.features(), test.labels()).unwrap();
    let usage = plane_usage(&out.model, test.features(), test.labels()).unwrap();
    let usage_row_error = usage
        .fractions
        .iter()
        .map(|r| (100.0 * r.iter().sum::<f64>() - 100.0).abs())
        .fold(0.0, f64::max);
    Run {
        accuracy: m.accuracy,
        ece_before: m.ece_before,
        ece_after: m.ece_after.unwrap(),
        lifted: out.lift.chosen.rff.is_some(),
        lift: out.lift.label(),
        planes: out.budget.counts().to_vec(),
        maxresp: stats.maxresp,
        resp_entropy: stats.resp_entropy,
        usage_row_error,
        argmax_preserved,
        seconds: start.elapsed().as_secs_f64(),
    }
}

type Runs = HashMap<(SyntheticKind, Variant), Vec<Run>>;

fn fit_all() -> Runs {
    use SyntheticKind::*;
    use Variant::*;
    let mut jobs = Vec::new();
    for kind in [Moons, Circles, Spirals, Aniso] {
        jobs.push((kind, Default));
    }
    jobs.extend([(Circles, LinearOnly), (Circles, LinearPlanes)]);
    for kind in [Moons, Circles] {
        for v in [FixedAlpha, NoUsagePenalty, RandomInit] {
            jobs.push((kind, v));
        }
    }
    let cells: Vec<(SyntheticKind, Variant, u64)> = jobs
        .iter()
        .flat_map(|&(k, v)| SEEDS.iter().map(move |&s| (k, v, s)))
        .collect();
    let runs: Vec<Run> = cells.par_iter().map(|&(k, v, s)| run(k, v, s)).collect();
    let mut out: Runs = HashMap::new();
    for ((k, v, _), r) in cells.into_iter().zip(runs) {
        out.entry((k, v)).or_default().push(r);
    }
    out
}

fn random_planes(rng: &mut ChaCha8Rng, dim: usize, counts: &[usize]) -> Planes {
    let mut p = Planes::zeros(dim, counts).unwrap();
    for v in p.params_mut() {
        *v = rng.random_range(-1.0..1.0);
    }
    p
}

fn c1_gradient_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let configs = 200;
    let rel = |fd: f64, an: f64| (fd - an).abs() / fd.abs().max(an.abs()).max(1e-8);
    let mut worst: f64 = 0.0;
    // Two-point differences at h = 1e-6 for reference; round-off limits them
    // on gradients near 1e-9.
    let mut worst_two_point: f64 = 0.0;
    let mut worst_two_point_large: f64 = 0.0;
    let h = 1e-3;
    for _ in 0..configs {
        let classes = rng.random_range(2..=3);
        let counts: Vec<usize> = (0..classes).map(|_| rng.random_range(1..=3)).collect();
        let dim = rng.random_range(1..=5);
        let b = rng.random_range(1..=8);
        let cfg = TrainConfig {
            lambda: [0.0, 1e-3][rng.random_range(0..2)],
            beta: [0.0, 0.5][rng.random_range(0..2)],
            label_smoothing: [0.0, 0.02][rng.random_range(0..2)],
            ..TrainConfig::default()
        };
        let alpha = [1.0, 3.0, 6.0][rng.random_range(0..3)];
        let x = Array2::from_shape_fn((b, dim), |_| rng.random_range(-2.0..2.0));
        let y: Vec<usize> = (0..b).map(|_| rng.random_range(0..classes)).collect();
        let planes = random_planes(&mut rng, dim, &counts);
        let usage: Vec<f64> = (0..planes.total_planes()).map(|_| rng.random_range(0.0..1.0)).collect();
        let coeffs = usage_coefficients(&usage, cfg.lambda, cfg.beta, cfg.delta);
        let batch = Batch::all(x.view(), &y);
        let g = gradients_with_coefficients(&batch, &planes, alpha, &coeffs, &cfg).unwrap();
        let loss_at = |j: usize, step: f64| {
            let mut p = planes.clone();
            p.params_mut()[j] += step;
            total_loss(&batch, &p, alpha, &coeffs, &cfg).unwrap()
        };
        for j in 0..planes.params().len() {
            // Five-point stencil, truncation error O(h^4).
            let fd = (8.0 * (loss_at(j, h) - loss_at(j, -h)) - (loss_at(j, 2.0 * h) - loss_at(j, -2.0 * h))) / (12.0 * h);
            let an = g.grad.params()[j];
            worst = worst.max(rel(fd, an));
            let two = (loss_at(j, 1e-6) - loss_at(j, -1e-6)) / 2e-6;
            worst_two_point = worst_two_point.max(rel(two, an));
            if two.abs().max(an.abs()) >= 1e-6 {
                worst_two_point_large = worst_two_point_large.max(rel(two, an));
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst < 1e-4 && secs < 30.0,
        format!(
            "{configs} configs, five-point central differences (h=1e-3): max relative error {worst:.2e} (< 1e-4), {secs:.2} s (< 30 s); \
             two-point h=1e-6 for reference: {worst_two_point:.2e} overall, {worst_two_point_large:.2e} where |grad| >= 1e-6"
        ),
    )
}

fn c2_logistic_reduction() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let classes = rng.random_range(2..=4);
        let dim = rng.random_range(1..=5);
        let b = rng.random_range(1..=16);
        let alpha = [1.0, 3.0, 6.0][rng.random_range(0..3)];
        let cfg = TrainConfig {
            lambda: 0.0,
            beta: 0.0,
            label_smoothing: 0.0,
            alpha_start: alpha,
            alpha_end: alpha,
            ..TrainConfig::default()
        };
        let x = Array2::from_shape_fn((b, dim), |_| rng.random_range(-2.0..2.0));
        let y: Vec<usize> = (0..b).map(|_| rng.random_range(0..classes)).collect();
        let planes = random_planes(&mut rng, dim, &vec![1; classes]);
        let mut tracker = UsageTracker::new(&planes, cfg.usage_momentum);
        let g = gradients(&Batch::all(x.view(), &y), &planes, alpha, &mut tracker, &cfg).unwrap();
        // Softmax regression: dW_c = mean((p_c - y_c) x), db_c = mean(p_c - y_c).
        let mut gw = vec![0.0; classes * dim];
        let mut gb = vec![0.0; classes];
        for (i, row) in x.rows().into_iter().enumerate() {
            let logits: Vec<f64> = (0..classes)
                .map(|c| planes.weight(c).iter().zip(row).map(|(w, v)| w * v).sum::<f64>() + planes.bias(c))
                .collect();
            let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let z: f64 = logits.iter().map(|l| (l - max).exp()).sum();
            for c in 0..classes {
                let r = (logits[c] - max).exp() / z - f64::from(u8::from(y[i] == c));
                gb[c] += r / b as f64;
                for j in 0..dim {
                    gw[c * dim + j] += r * row[j] / b as f64;
                }
            }
        }
        for (a, o) in g.grad.weights().iter().zip(&gw).chain(g.grad.biases().iter().zip(&gb)) {
            worst = worst.max((a - o).abs());
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let centers = [[0.0, 0.0], [6.0, 0.0], [0.0, 6.0]];
    let n = 900;
    let x = Array2::from_shape_fn((n, 2), |(i, j)| centers[i % 3][j] + rng.random_range(-1.2..1.2));
    let y: Vec<usize> = (0..n).map(|i| i % 3).collect();
    let blobs = Dataset::new(x, y, 3).unwrap();
    let split = stratified_split(&blobs, &SplitSpec::standard(0)).unwrap();
    let mut cfg = RecipeConfig {
        lift: LiftMode::Linear,
        planes: PlanesSpec::Fixed { per_class: 1 },
        ..RecipeConfig::default()
    };
    cfg.train.alpha_start = 6.0;
    cfg.train.alpha_end = 6.0;
    cfg.train.lambda = 0.0;
    cfg.train.beta = 0.0;
    cfg.train.label_smoothing = 0.0;
    let out = fit_recipe(&split.train, &split.val, &cfg).unwrap();
    let acc = evaluate_model(&out.model, None, &split.test).unwrap().accuracy;
    outcome(
        worst < 1e-10 && acc >= 0.99,
        format!("max |grad - softmax-regression grad| {worst:.2e} (< 1e-10); separable blobs test accuracy {acc:.4} (>= 0.99)"),
    )
}

fn accuracy_criterion(runs: &Runs, kind: SyntheticKind, threshold: f64) -> (bool, f64, String) {
    let r = &runs[&(kind, Variant::Default)];
    let acc: Vec<f64> = r.iter().map(|r| r.accuracy).collect();
    let m = mean(&acc);
    let lifts: Vec<&str> = r.iter().map(|r| r.lift.as_str()).collect();
    (
        m >= threshold,
        m,
        format!("mean accuracy {m:.4} (>= {threshold}); seeds [{}]; lifts [{}]", list(&acc), lifts.join("; ")),
    )
}

fn c3_moons(runs: &Runs) -> Outcome {
    let (pass, _, detail) = accuracy_criterion(runs, SyntheticKind::Moons, 0.93);
    let secs: f64 = runs[&(SyntheticKind::Moons, Variant::Default)].iter().map(|r| r.seconds).sum();
    outcome(pass && secs < 120.0, format!("{detail}; {secs:.1} s for 3 seeds (< 120 s)"))
}

fn c4_circles(runs: &Runs) -> Outcome {
    let (pass, _, detail) = accuracy_criterion(runs, SyntheticKind::Circles, 0.98);
    let all_rff = runs[&(SyntheticKind::Circles, Variant::Default)].iter().all(|r| r.lifted);
    let lin: Vec<f64> = runs[&(SyntheticKind::Circles, Variant::LinearOnly)].iter().map(|r| r.accuracy).collect();
    let planes: Vec<f64> = runs[&(SyntheticKind::Circles, Variant::LinearPlanes)].iter().map(|r| r.accuracy).collect();
    let lin_mean = mean(&lin);
    outcome(
        pass && all_rff && lin_mean <= 0.60,
        format!(
            "{detail}; auto lift picked RFF on every seed: {all_rff}; linear-only (one plane per class) mean {lin_mean:.4} (<= 0.60); \
             for reference linear lift with the automatic plane budget reaches {:.4}",
            mean(&planes)
        ),
    )
}

fn c5_spirals(runs: &Runs) -> Outcome {
    let (pass, _, detail) = accuracy_criterion(runs, SyntheticKind::Spirals, 0.93);
    let all_rff = runs[&(SyntheticKind::Spirals, Variant::Default)].iter().all(|r| r.lifted);
    outcome(pass && all_rff, format!("{detail}; RFF on every seed: {all_rff}"))
}

fn c6_aniso(runs: &Runs) -> Outcome {
    let (pass, _, detail) = accuracy_criterion(runs, SyntheticKind::Aniso, 0.78);
    outcome(pass, detail)
}

fn c7_calibration(runs: &Runs) -> Outcome {
    let r = &runs[&(SyntheticKind::Moons, Variant::Default)];
    let before: Vec<f64> = r.iter().map(|r| r.ece_before).collect();
    let after: Vec<f64> = r.iter().map(|r| r.ece_after).collect();
    let (mb, ma) = (mean(&before), mean(&after));
    let preserved = r.iter().all(|r| r.argmax_preserved);
    let probs = Array2::from_shape_vec((2, 2), vec![0.8, 0.2, 0.4, 0.6]).unwrap();
    let hand = ece(probs.view(), &[0, 0], DEFAULT_BINS).unwrap().ece;
    let hand_ok = (hand - 0.4).abs() < 1e-12;
    outcome(
        ma <= 0.05 && ma <= mb && preserved && hand_ok,
        format!(
            "mean test ECE {mb:.4} -> {ma:.4} after temperature (<= 0.05 and not above before); seeds before [{}] after [{}]; \
             argmax unchanged: {preserved}; 2-sample example ECE {hand:.15} (0.4 within 1e-12)",
            list(&before),
            list(&after)
        ),
    )
}

fn c8_interpretability(runs: &Runs) -> Outcome {
    let r = &runs[&(SyntheticKind::Moons, Variant::Default)];
    let maxresp = mean(&r.iter().map(|r| r.maxresp).collect::<Vec<_>>());
    let entropy = mean(&r.iter().map(|r| r.resp_entropy).collect::<Vec<_>>());
    let row_err = r.iter().map(|r| r.usage_row_error).fold(0.0, f64::max);
    let planes: Vec<String> = r.iter().map(|r| format!("{:?}", r.planes)).collect();
    outcome(
        maxresp >= 0.95 && entropy <= 0.10 && row_err <= 1e-9,
        format!(
            "moons maxresp {maxresp:.4} (>= 0.95), entropy {entropy:.4} (<= 0.10), usage rows off 100% by at most {row_err:.1e}% (<= 1e-9); planes {}",
            planes.join(" ")
        ),
    )
}

fn c9_soft_or() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut worst_bound: f64 = 0.0;
    let mut worst_norm: f64 = 0.0;
    let tol = 1e-10;
    for _ in 0..10_000 {
        let m = rng.random_range(1..=8);
        let alpha = 10f64.powf(rng.random_range(-1.0..2.0));
        let scale = 10f64.powf(rng.random_range(-2.0..3.0));
        let z: Vec<f64> = (0..m).map(|_| scale * rng.random_range(-1.0..1.0)).collect();
        let s = class_score(&z, alpha).unwrap();
        let zmax = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let upper = zmax + (m as f64).ln() / alpha;
        worst_bound = worst_bound.max(zmax - s).max(s - upper);
        let a = responsibilities(&z, alpha).unwrap();
        worst_norm = worst_norm.max((a.iter().sum::<f64>() - 1.0).abs());
    }
    outcome(
        worst_bound <= tol && worst_norm <= tol,
        format!(
            "10000 instances: worst sandwich violation {worst_bound:.1e}, worst |sum a - 1| {worst_norm:.1e} (<= 1e-10)"
        ),
    )
}

fn c10_rff_kernel() -> Outcome {
    let gamma = 0.5;
    let map = RffMap::sample(2, 4096, gamma, 5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut err = 0.0;
    let mut norm_err: f64 = 0.0;
    for _ in 0..100 {
        let x: Vec<f64> = (0..2).map(|_| rng.random_range(-1.5..1.5)).collect();
        let y: Vec<f64> = (0..2).map(|_| rng.random_range(-1.5..1.5)).collect();
        let (px, py) = (map.transform(&x).unwrap(), map.transform(&y).unwrap());
        let dot: f64 = px.iter().zip(&py).map(|(a, b)| a * b).sum();
        let d2: f64 = x.iter().zip(&y).map(|(a, b)| (a - b).powi(2)).sum();
        err += (dot - 2.0 * (-gamma * d2).exp()).abs() / 100.0;
        for p in [&px, &py] {
            norm_err = norm_err.max((p.iter().map(|v| v * v).sum::<f64>() - 2.0).abs());
        }
    }
    outcome(
        err <= 0.1 && norm_err <= 1e-12,
        format!("D=4096, gamma=0.5: mean kernel error {err:.4} (<= 0.1), max | |phi|^2 - 2 | {norm_err:.1e} (<= 1e-12)"),
    )
}

fn c11_latency() -> Outcome {
    let sc = plane_scaling_sweep(&SweepConfig::default()).unwrap();
    let pts: Vec<String> = sc.points.iter().map(|p| format!("{}:{:.0}ns", p.total_planes, p.ns_per_example)).collect();
    outcome(
        sc.r_squared >= 0.95,
        format!(
            "d'={}, latency vs total planes R^2 {:.4} (>= 0.95), slope {:.1} ns/plane; [{}]",
            sc.dim,
            sc.r_squared,
            sc.slope,
            pts.join(", ")
        ),
    )
}

fn c12_ablations(runs: &Runs) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for kind in [SyntheticKind::Moons, SyntheticKind::Circles] {
        let base = mean(&runs[&(kind, Variant::Default)].iter().map(|r| r.accuracy).collect::<Vec<_>>());
        let mut deltas = Vec::new();
        for (v, name) in [
            (Variant::FixedAlpha, "fixed alpha=6"),
            (Variant::NoUsagePenalty, "beta=0"),
            (Variant::RandomInit, "random init"),
        ] {
            let m = mean(&runs[&(kind, v)].iter().map(|r| r.accuracy).collect::<Vec<_>>());
            pass &= m <= base + 0.005;
            deltas.push(format!("{name} {:+.4}", m - base));
        }
        parts.push(format!("{} (default {base:.4}): {}", kind.name(), deltas.join(", ")));
    }
    outcome(pass, format!("deltas vs default (each <= +0.005): {}", parts.join("; ")))
}

fn gmc(args: &[&str], dir: &Path) -> std::process::Output {
    let out = Command::new(env!("CARGO_BIN_EXE_gmc")).args(args).current_dir(dir).output().unwrap();
    assert!(out.status.success(), "gmc {args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn c13_determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let mut same = Vec::new();
    for run in ["a", "b"] {
        gmc(&["fit", "--dataset", "moons", "--seed", "0", "--out", run], d);
        for fmt in ["csv", "json"] {
            let out = format!("{run}/metrics.{fmt}");
            gmc(&["evaluate", "--model", &format!("{run}/model.json"), "--dataset", "moons", "--format", fmt, "--out", &out], d);
        }
        let out = format!("{run}/pred.csv");
        gmc(&["predict", "--model", &format!("{run}/model.json"), "--dataset", "moons", "--split", "test", "--out", &out], d);
    }
    for f in ["model.json", "train_log.csv", "metrics.csv", "metrics.json", "pred.csv"] {
        let a = std::fs::read(d.join("a").join(f)).unwrap();
        let b = std::fs::read(d.join("b").join(f)).unwrap();
        same.push((f, a == b));
    }
    let pass = same.iter().all(|(_, s)| *s);
    let detail: Vec<String> = same.iter().map(|(f, s)| format!("{f} {}", if *s { "identical" } else { "DIFFERS" })).collect();
    outcome(pass, format!("repeated `gmc fit/evaluate/predict` on moons seed 0: {}", detail.join(", ")))
}

fn main() {
    let start = Instant::now();
    let mut results: Vec<(u32, &str, Outcome)> = Vec::new();
    let mut report = |id: u32, name: &'static str, o: Outcome| {
        println!("[{}] {id:>2} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        results.push((id, name, o));
    };
    report(1, "gradient oracle", c1_gradient_oracle());
    report(2, "logistic-regression reduction", c2_logistic_reduction());
    report(9, "soft-OR invariants", c9_soft_or());
    report(10, "RFF kernel", c10_rff_kernel());
    report(11, "latency scaling", c11_latency());
    let runs = fit_all();
    report(3, "moons accuracy", c3_moons(&runs));
    report(4, "circles lift", c4_circles(&runs));
    report(5, "spirals accuracy", c5_spirals(&runs));
    report(6, "aniso accuracy", c6_aniso(&runs));
    report(7, "calibration", c7_calibration(&runs));
    report(8, "interpretability", c8_interpretability(&runs));
    report(12, "ablation direction", c12_ablations(&runs));
    report(13, "determinism", c13_determinism());
    let failed: Vec<u32> = results.iter().filter(|r| !r.2.pass).map(|r| r.0).collect();
    println!(
        "acceptance: {}/{} criteria passed in {:.0} s",
        results.len() - failed.len(),
        results.len(),
        start.elapsed().as_secs_f64()
    );
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
