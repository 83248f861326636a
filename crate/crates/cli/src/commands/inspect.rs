use std::fmt::Write;

use gmc::calibration::{apply_temperature, ece, write_reliability_csv, DEFAULT_BINS};
use gmc::diagnostics::{decision_grid, interpretability_report, responsibility_grid, Bounds, PlaneUsage};
use serde::Serialize;

use super::{csv_text, data_seed, labelled_data, open_model, write_file};
use crate::args::InspectArgs;
use crate::svg;

#[derive(Debug, Clone, Serialize)]
pub struct ManifestEntry {
    pub file: String,
    pub description: String,
}

/// Contents of an inspection bundle.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub model: String,
    pub dataset: String,
    pub split: String,
    pub seed: u64,
    pub samples: usize,
    pub files: Vec<ManifestEntry>,
    /// Outputs that do not apply to this model, with the reason.
    pub skipped: Vec<ManifestEntry>,
}

/// Winner fractions as percentages, one row per class, padded to the
/// largest plane count.
fn usage_table(usage: &PlaneUsage, class_names: &[String]) -> (String, String) {
    let width = usage.fractions.iter().map(Vec::len).max().unwrap_or(0);
    let mut csv = String::from("class,samples");
    let mut text = format!("{:<8}", "Class");
    for m in 1..=width {
        let _ = write!(csv, ",plane_{m}");
        let _ = write!(text, " {:>8}", format!("Plane {m}"));
    }
    csv.push('\n');
    text.push('\n');
    for (c, row) in usage.fractions.iter().enumerate() {
        let _ = write!(csv, "{},{}", class_names[c], usage.sample_counts[c]);
        let _ = write!(text, "{:<8}", class_names[c]);
        for m in 0..width {
            match row.get(m) {
                Some(v) => {
                    let _ = write!(csv, ",{:?}", 100.0 * v);
                    let _ = write!(text, " {:>7.1}%", 100.0 * v);
                }
                None => {
                    csv.push(',');
                    let _ = write!(text, " {:>8}", "-");
                }
            }
        }
        if usage.sample_counts[c] == 0 {
            text.push_str("  (absent)");
        }
        csv.push('\n');
        text.push('\n');
    }
    (csv, text)
}

pub fn inspect(args: &InspectArgs) -> anyhow::Result<Manifest> {
    let (file, model) = open_model(&args.model, args.alpha)?;
    let seed = data_seed(args.seed, &file);
    let data = labelled_data(&file, &args.data, args.split, seed)?;
    let dir = &args.out;
    std::fs::create_dir_all(dir)?;
    let mut files = Vec::new();
    let mut skipped = Vec::new();
    let mut emit = |name: &str, description: &str, contents: String| -> anyhow::Result<()> {
        write_file(&dir.join(name), contents)?;
        files.push(ManifestEntry {
            file: name.into(),
            description: description.into(),
        });
        Ok(())
    };

    let names = file.feature_names.clone().or_else(|| data.feature_names().map(<[String]>::to_vec));
    let report = interpretability_report(&model, data.features(), data.labels(), args.top_k, names.as_deref())?;
    let (usage_csv, usage_txt) = usage_table(&report.plane_usage, &file.class_names);
    emit("plane_usage.csv", "winner fractions (%) per class and plane", usage_csv)?;
    emit("plane_usage.txt", "winner fractions (%) as a table", usage_txt)?;
    let stats = serde_json::json!({
        "samples": data.len(),
        "maxresp": report.maxresp,
        "resp_entropy": report.resp_entropy,
        "plane_counts": (0..model.class_count()).map(|c| model.planes.plane_count(c)).collect::<Vec<_>>(),
        "absent_classes": report.plane_usage.absent_classes(),
    });
    emit("responsibility_stats.json", "maxresp and responsibility entropy", serde_json::to_string_pretty(&stats)? + "\n")?;

    match &report.saliency {
        Some(per_class) => {
            let mut s = String::from("class,plane,rank,feature,index,weight,standardized_weight\n");
            for (c, planes) in per_class.iter().enumerate() {
                for (m, feats) in planes.iter().enumerate() {
                    for (rank, f) in feats.iter().enumerate() {
                        let _ = writeln!(
                            s,
                            "{},{m},{},{},{},{:?},{:?}",
                            file.class_names[c],
                            rank + 1,
                            f.name,
                            f.index,
                            f.weight,
                            f.standardized_weight
                        );
                    }
                }
            }
            emit("saliency.csv", "top-k signed input weights per plane, raw units", s)?;
        }
        None => skipped.push(ManifestEntry {
            file: "saliency.csv".into(),
            description: "unsupported: lifted coordinates have no per-feature meaning".into(),
        }),
    }

    if model.input_dim() == 2 {
        let bounds = Bounds::from_data(data.features())?;
        let grid = decision_grid(&model, bounds, args.resolution)?;
        emit("decision_grid.csv", "predicted class per grid cell", csv_text(|b| grid.write_csv(b))?)?;
        emit(
            "decision_regions.svg",
            "decision regions with data points",
            svg::decision_regions(&grid, data.features(), data.labels(), &file.class_names, "Decision regions"),
        )?;
        for c in 0..model.class_count() {
            let g = responsibility_grid(&model, c, bounds, args.resolution)?;
            let name = &file.class_names[c];
            emit(
                &format!("responsibility_class_{c}.csv"),
                &format!("plane responsibilities of class {name} per grid cell"),
                csv_text(|b| g.write_csv(b))?,
            )?;
            emit(
                &format!("responsibility_class_{c}.svg"),
                &format!("most responsible plane of class {name}"),
                svg::responsibility_map(&g, &format!("Plane responsibility, class {name}")),
            )?;
        }
    } else {
        skipped.push(ManifestEntry {
            file: "decision_regions.svg".into(),
            description: format!("grids need 2-D inputs; the model has {}", model.input_dim()),
        });
    }

    let scores = model.class_scores(data.features())?;
    let mut temps = vec![("before", 1.0)];
    match file.temperature {
        Some(t) => temps.push(("after", t)),
        None => skipped.push(ManifestEntry {
            file: "reliability_after.csv".into(),
            description: "the model has no fitted temperature".into(),
        }),
    }
    for (tag, t) in temps {
        let probs = apply_temperature(scores.view(), t)?;
        let rep = ece(probs.view(), data.labels(), DEFAULT_BINS)?;
        emit(
            &format!("reliability_{tag}.csv"),
            &format!("reliability bins {tag} temperature scaling (T = {t})"),
            csv_text(|b| write_reliability_csv(&rep.bins, b))?,
        )?;
        let title = if tag == "before" { "Reliability, T = 1".to_string() } else { format!("Reliability, T = {t:.3}") };
        emit(
            &format!("reliability_{tag}.svg"),
            &format!("reliability diagram {tag} temperature scaling"),
            svg::reliability_diagram(&rep.bins, rep.ece, &title),
        )?;
    }

    let manifest = Manifest {
        model: args.model.display().to_string(),
        dataset: args.data.dataset.clone(),
        split: args.split.name().into(),
        seed,
        samples: data.len(),
        files,
        skipped,
    };
    write_file(&dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)? + "\n")?;
    println!(
        "maxresp {:.4}  entropy {:.4}; wrote {} files to {}",
        report.maxresp,
        report.resp_entropy,
        manifest.files.len() + 1,
        dir.display()
    );
    Ok(manifest)
}

