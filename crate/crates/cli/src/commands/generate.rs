use anyhow::anyhow;
use gmc::datasets::write_csv;
use serde_json::json;

use super::{csv_text, write_file};
use crate::args::{Format, GenerateArgs};
use crate::data::synthetic_kind;

pub fn generate(args: &GenerateArgs) -> anyhow::Result<()> {
    let kind = synthetic_kind(&args.dataset).ok_or_else(|| anyhow!("unknown generator `{}`", args.dataset))?;
    let ds = kind.generate(args.size.unwrap_or(kind.default_size()), args.seed)?;
    let text = match args.format {
        Format::Csv => csv_text(|buf| write_csv(&ds, buf))?,
        Format::Json => {
            let rows: Vec<Vec<f64>> = ds.features().rows().into_iter().map(|r| r.to_vec()).collect();
            let labels: Vec<&str> = ds.labels().iter().map(|&y| ds.class_names()[y].as_str()).collect();
            serde_json::to_string_pretty(&json!({
                "generator": kind.name(),
                "seed": args.seed,
                "features": rows,
                "labels": labels,
            }))?
        }
    };
    write_file(&args.out, text)?;
    println!(
        "wrote {} rows of {} ({} classes) to {}",
        ds.len(),
        kind.name(),
        ds.class_count(),
        args.out.display()
    );
    Ok(())
}
