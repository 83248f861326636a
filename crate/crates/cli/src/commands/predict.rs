use std::fmt::Write;

use gmc::calibration::apply_temperature;
use gmc::model::argmax;
use ndarray::Array2;
use serde::Serialize;

use super::{data_seed, labelled_data, open_model, write_file};
use crate::args::{Format, Part, PredictArgs};
use crate::data;

#[derive(Serialize)]
struct Prediction<'a> {
    row: usize,
    predicted: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    label: Option<&'a str>,
    probabilities: Vec<f64>,
}

pub fn predict(args: &PredictArgs) -> anyhow::Result<()> {
    let (file, model) = open_model(&args.model, args.alpha)?;
    let (x, labels): (Array2<f64>, Option<Vec<usize>>) = if args.unlabeled {
        if args.split != Part::All {
            anyhow::bail!("--unlabeled data cannot be split");
        }
        (data::load_unlabeled(&args.data)?, None)
    } else {
        let ds = labelled_data(&file, &args.data, args.split, data_seed(args.seed, &file))?;
        (ds.features().to_owned(), Some(ds.labels().to_vec()))
    };
    let scores = model.class_scores(x.view())?;
    let t = if args.uncalibrated { 1.0 } else { file.temperature.unwrap_or(1.0) };
    let probs = apply_temperature(scores.view(), t)?;
    let names = &file.class_names;
    let rows: Vec<Prediction> = probs
        .rows()
        .into_iter()
        .enumerate()
        .map(|(i, p)| {
            let p = p.to_vec();
            Prediction {
                row: i,
                predicted: &names[argmax(&p)],
                label: labels.as_ref().map(|l| names[l[i]].as_str()),
                probabilities: p,
            }
        })
        .collect();
    let text = match args.format {
        Format::Json => serde_json::to_string_pretty(&rows)? + "\n",
        Format::Csv => {
            let mut s = String::from("row,predicted");
            if labels.is_some() {
                s.push_str(",label");
            }
            for n in names {
                let _ = write!(s, ",p_{n}");
            }
            s.push('\n');
            for r in &rows {
                let _ = write!(s, "{},{}", r.row, r.predicted);
                if let Some(l) = r.label {
                    let _ = write!(s, ",{l}");
                }
                for p in &r.probabilities {
                    let _ = write!(s, ",{p:?}");
                }
                s.push('\n');
            }
            s
        }
    };
    match &args.out {
        Some(path) => {
            write_file(path, &text)?;
            println!("wrote {} predictions to {}", rows.len(), path.display());
        }
        None => print!("{text}"),
    }
    Ok(())
}
