use std::fmt::Write;

use gmc::datasets::stratified_split;
use gmc::harness::{evaluate_model, TestMetrics};
use gmc::persist::{save_model, ModelFile, TrainingMetadata};
use gmc::recipe::LiftReport;
use gmc::{fit_recipe, FitOutcome, PlanesSpec, RecipeConfig, SplitSpec};
use serde::Serialize;

use super::{csv_text, write_file};
use crate::args::FitArgs;
use crate::data;

/// What `fit` wrote and measured.
#[derive(Debug, Clone, Serialize)]
pub struct FitReport {
    pub lift: String,
    pub planes: Vec<usize>,
    pub init: String,
    pub temperature: Option<f64>,
    pub test: TestMetrics,
    pub train_seconds: f64,
}

pub fn fit(args: &FitArgs) -> anyhow::Result<FitReport> {
    let cfg = args.recipe.resolve(args.seed)?;
    let ds = data::load(&args.data, args.seed)?;
    let split = stratified_split(&ds, &SplitSpec::standard(args.seed))?;
    let out = fit_recipe(&split.train, &split.val, &cfg)?;
    let temperature = out.temperature.as_ref().map(|t| t.temperature);
    let metadata = TrainingMetadata {
        recipe: Some(cfg.clone()),
        seed: Some(args.seed),
        dataset_fingerprint: Some(split.train.fingerprint()),
        dataset: Some(args.data.dataset.clone()),
        init_strategy: Some(out.init_strategy.name().into()),
        lift: Some(out.lift.label()),
        best_epoch: out.log.best_epoch,
        diverged: out.log.diverged,
    };
    let file = ModelFile::new(&out.model, temperature, ds.feature_names().map(<[String]>::to_vec), metadata);
    std::fs::create_dir_all(&args.out)?;
    save_model(&file, &args.out.join("model.json"))?;
    write_file(&args.out.join("train_log.csv"), csv_text(|buf| out.log.write_csv(buf))?)?;

    let test = evaluate_model(&out.model, temperature, &split.test)?;
    let sizes = [split.train.len(), split.val.len(), split.test.len()];
    let summary = summary(&args.data.dataset, &ds, sizes, args.seed, &cfg, &out, &test);
    write_file(&args.out.join("summary.txt"), &summary)?;
    print!("{summary}");
    Ok(FitReport {
        lift: out.lift.label(),
        planes: out.budget.counts().to_vec(),
        init: out.init_strategy.name().into(),
        temperature,
        test,
        train_seconds: out.train_seconds,
    })
}

fn lift_lines(lift: &LiftReport, s: &mut String) {
    let _ = writeln!(s, "lift         {}", lift.label());
    for c in &lift.candidates {
        let name = match c.config.rff {
            Some(r) => format!("rff(D={}, gamma={})", r.dim, r.gamma),
            None => "linear".into(),
        };
        let ll = c.log_likelihood.map_or_else(|| "failed".into(), |v| format!("{v:.4}"));
        let _ = writeln!(s, "  probe      {name:<24} d'={:<5} val log-lik {ll}", c.output_dim);
    }
}

fn summary(
    name: &str,
    ds: &gmc::Dataset,
    sizes: [usize; 3],
    seed: u64,
    cfg: &RecipeConfig,
    out: &FitOutcome,
    test: &TestMetrics,
) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "dataset      {name} ({} rows, {} features, {} classes)",
        ds.len(),
        ds.dim(),
        ds.class_count()
    );
    let _ = writeln!(s, "split        train {} / val {} / test {} (seed {seed})", sizes[0], sizes[1], sizes[2]);
    lift_lines(&out.lift, &mut s);
    let budget = match cfg.planes {
        PlanesSpec::Auto { cap } => format!("auto, cap {cap}"),
        PlanesSpec::Fixed { .. } => "fixed".into(),
    };
    let _ = writeln!(s, "planes       {:?} ({budget})", out.budget.counts());
    let _ = writeln!(s, "init         {}", out.init_strategy.name());
    let log = &out.log;
    let mut status = Vec::new();
    if log.stopped_early {
        status.push("stopped early");
    }
    if log.diverged {
        status.push("diverged, best parameters restored");
    }
    let _ = writeln!(
        s,
        "epochs       {} (best {}, val loss {:.5}{}{})",
        log.epochs.len(),
        log.best_epoch.map_or_else(|| "-".into(), |e| e.to_string()),
        log.best_val_loss,
        if status.is_empty() { "" } else { ", " },
        status.join(", ")
    );
    match &out.temperature {
        Some(t) => {
            let _ = writeln!(
                s,
                "temperature  {:.4} (val NLL {:.5} -> {:.5}{})",
                t.temperature,
                t.val_nll_before,
                t.val_nll_after,
                if t.degenerate { ", degenerate scores" } else { "" }
            );
        }
        None => {
            let _ = writeln!(s, "temperature  none");
        }
    }
    let ece = match test.ece_after {
        Some(after) => format!("{:.4} -> {after:.4}", test.ece_before),
        None => format!("{:.4}", test.ece_before),
    };
    let _ = writeln!(
        s,
        "test         accuracy {:.4}  macro-F1 {:.4}  ECE {ece}",
        test.accuracy, test.macro_f1
    );
    let _ = writeln!(s, "train time   {:.2} s", out.train_seconds);
    s
}
