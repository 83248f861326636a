use std::fmt::Write;

use gmc::diagnostics::{plane_usage, responsibility_stats, PlaneUsage};
use gmc::harness::evaluate_model;
use gmc::persist::ModelFile;
use gmc::{Dataset, GmcModel};
use serde::Serialize;

use super::{data_seed, labelled_data, open_model, write_file};
use crate::args::{EvaluateArgs, Format};

/// Metrics of a model on labelled data.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Evaluation {
    pub samples: usize,
    pub accuracy: f64,
    pub macro_f1: f64,
    pub ece_before: f64,
    /// ECE after the stored temperature, if the model has one.
    pub ece_after: Option<f64>,
    pub temperature: Option<f64>,
    pub maxresp: f64,
    pub resp_entropy: f64,
    pub plane_usage: PlaneUsage,
}

pub fn evaluation(model: &GmcModel, temperature: Option<f64>, data: &Dataset) -> anyhow::Result<Evaluation> {
    let m = evaluate_model(model, temperature, data)?;
    let stats = responsibility_stats(model, data.features(), data.labels())?;
    Ok(Evaluation {
        samples: data.len(),
        accuracy: m.accuracy,
        macro_f1: m.macro_f1,
        ece_before: m.ece_before,
        ece_after: m.ece_after,
        temperature,
        maxresp: stats.maxresp,
        resp_entropy: stats.resp_entropy,
        plane_usage: plane_usage(model, data.features(), data.labels())?,
    })
}

impl Evaluation {
    /// Long format with columns `metric,class,plane,value`; `class` and
    /// `plane` are empty for scalar metrics. Plane-usage rows are winner
    /// fractions.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("metric,class,plane,value\n");
        let mut scalar = |name: &str, v: Option<f64>| {
            let v = v.map_or_else(String::new, |v| format!("{v:?}"));
            let _ = writeln!(s, "{name},,,{v}");
        };
        scalar("samples", Some(self.samples as f64));
        scalar("accuracy", Some(self.accuracy));
        scalar("macro_f1", Some(self.macro_f1));
        scalar("ece_before", Some(self.ece_before));
        scalar("ece_after", self.ece_after);
        scalar("temperature", self.temperature);
        scalar("maxresp", Some(self.maxresp));
        scalar("resp_entropy", Some(self.resp_entropy));
        for (c, row) in self.plane_usage.fractions.iter().enumerate() {
            for (m, v) in row.iter().enumerate() {
                let _ = writeln!(s, "plane_usage,{c},{m},{v:?}");
            }
        }
        s
    }

    pub fn render(&self, format: Format) -> anyhow::Result<String> {
        Ok(match format {
            Format::Csv => self.to_csv(),
            Format::Json => serde_json::to_string_pretty(self)? + "\n",
        })
    }
}

pub fn evaluate(args: &EvaluateArgs) -> anyhow::Result<Evaluation> {
    let (file, model) = open_model(&args.model, args.alpha)?;
    let ev = evaluate_file(&file, &model, args)?;
    let text = ev.render(args.format)?;
    match &args.out {
        Some(path) => {
            write_file(path, &text)?;
            let ece = match ev.ece_after {
                Some(a) => format!("{:.4} -> {a:.4}", ev.ece_before),
                None => format!("{:.4}", ev.ece_before),
            };
            println!(
                "accuracy {:.4}  macro-F1 {:.4}  ECE {ece}  maxresp {:.4}  entropy {:.4}  ({} samples, {} split)",
                ev.accuracy,
                ev.macro_f1,
                ev.maxresp,
                ev.resp_entropy,
                ev.samples,
                args.split.name()
            );
        }
        None => print!("{text}"),
    }
    Ok(ev)
}

fn evaluate_file(file: &ModelFile, model: &GmcModel, args: &EvaluateArgs) -> anyhow::Result<Evaluation> {
    let seed = data_seed(args.seed, file);
    let data = labelled_data(file, &args.data, args.split, seed)?;
    evaluation(model, file.temperature, &data)
}
