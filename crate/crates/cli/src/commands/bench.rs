use std::fmt::Write;
use std::time::Duration;

use gmc::harness::{run_bench, BenchReport, BenchSpec, LatencyConfig, SweepConfig};

use super::{csv_text, write_file};
use crate::args::{BenchArgs, Format};

pub fn bench(args: &BenchArgs) -> anyhow::Result<BenchReport> {
    let mut latency = LatencyConfig::default();
    if let Some(n) = args.latency_inferences {
        latency.min_inferences = n;
    }
    if let Some(ms) = args.latency_budget_ms {
        latency.time_budget = Duration::from_millis(ms);
    }
    let sweep = (!args.no_sweep).then(|| SweepConfig {
        latency,
        ..SweepConfig::default()
    });
    let spec = BenchSpec {
        datasets: args.datasets.clone(),
        seeds: args.seeds.clone(),
        size: args.size,
        recipe: args.recipe.resolve(0)?,
        latency,
        sweep,
    };
    let report = run_bench(&spec)?;
    std::fs::create_dir_all(&args.out)?;
    match args.format {
        Format::Csv => {
            write_file(&args.out.join("rows.csv"), csv_text(|b| report.write_rows_csv(b))?)?;
            write_file(&args.out.join("aggregates.csv"), csv_text(|b| report.write_aggregates_csv(b))?)?;
            if let Some(sc) = &report.scaling {
                let mut s = String::from("total_planes,ns_per_example\n");
                for p in &sc.points {
                    let _ = writeln!(s, "{},{:?}", p.total_planes, p.ns_per_example);
                }
                write_file(&args.out.join("scaling.csv"), s)?;
            }
        }
        Format::Json => write_file(&args.out.join("bench.json"), serde_json::to_string_pretty(&report)? + "\n")?,
    }
    print!("{}", table(&report));
    Ok(report)
}

fn table(report: &BenchReport) -> String {
    let mut s = format!(
        "{:<10} {:>4} {:>17} {:>17} {:>17} {:>17} {:>12}\n",
        "dataset", "runs", "accuracy", "macro-F1", "ECE before", "ECE after", "latency ns"
    );
    let ms = |v: gmc::harness::MeanStd| format!("{:.4} ± {:.4}", v.mean, v.std);
    for a in &report.aggregates {
        let _ = writeln!(
            s,
            "{:<10} {:>4} {:>17} {:>17} {:>17} {:>17} {:>12.0}",
            a.dataset,
            a.runs,
            ms(a.accuracy),
            ms(a.macro_f1),
            ms(a.ece_before),
            ms(a.ece_after),
            a.latency_ns.mean
        );
    }
    for r in report.rows.iter().filter(|r| r.error.is_some()) {
        let _ = writeln!(s, "failed: {} seed {}: {}", r.dataset, r.seed, r.error.as_deref().unwrap_or(""));
    }
    if let Some(sc) = &report.scaling {
        let _ = writeln!(
            s,
            "latency vs total planes at d'={}: {:.2} ns/plane + {:.1} ns, R² {:.4}",
            sc.dim, sc.slope, sc.intercept, sc.r_squared
        );
    }
    s
}
