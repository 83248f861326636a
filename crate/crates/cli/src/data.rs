use std::path::Path;

use anyhow::{anyhow, bail, Context};
use gmc::datasets::{load_csv, stratified_split, LabelColumn, SyntheticKind};
use gmc::{Dataset, SplitSpec};
use ndarray::Array2;

use crate::args::{DataArgs, Part};

/// A generator name unless a file of that name exists.
pub fn synthetic_kind(name: &str) -> Option<SyntheticKind> {
    if Path::new(name).exists() {
        return None;
    }
    name.parse().ok()
}

pub fn load(args: &DataArgs, seed: u64) -> anyhow::Result<Dataset> {
    if let Some(kind) = synthetic_kind(&args.dataset) {
        return Ok(kind.generate(args.size.unwrap_or(kind.default_size()), seed)?);
    }
    let path = Path::new(&args.dataset);
    if !path.exists() {
        bail!("dataset `{}` is neither a generator nor an existing file", args.dataset);
    }
    if args.size.is_some() {
        bail!("--size only applies to generated datasets");
    }
    let label: LabelColumn = args.label_column.parse().unwrap_or_default();
    load_csv(path, &label, !args.no_header).with_context(|| format!("loading {}", path.display()))
}

/// Every column of a CSV file as a feature.
pub fn load_unlabeled(args: &DataArgs) -> anyhow::Result<Array2<f64>> {
    let path = Path::new(&args.dataset);
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(!args.no_header)
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let mut values = Vec::new();
    let mut width = None;
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + 1 + usize::from(!args.no_header);
        match width {
            None => width = Some(rec.len()),
            Some(w) if w != rec.len() => bail!("line {line}: expected {w} fields, found {}", rec.len()),
            Some(_) => {}
        }
        for (j, field) in rec.iter().enumerate() {
            let v: f64 = field
                .parse()
                .map_err(|_| anyhow!("line {line}, column {j}: `{field}` is not a number"))?;
            values.push(v);
        }
    }
    let w = width.ok_or_else(|| anyhow!("{} has no data rows", path.display()))?;
    Ok(Array2::from_shape_vec((values.len() / w, w), values)?)
}

pub fn select(ds: Dataset, part: Part, seed: u64) -> anyhow::Result<Dataset> {
    if part == Part::All {
        return Ok(ds);
    }
    let split = stratified_split(&ds, &SplitSpec::standard(seed))?;
    Ok(match part {
        Part::Train => split.train,
        Part::Val => split.val,
        Part::Test => split.test,
        Part::All => unreachable!(),
    })
}

/// Re-index labels into the model's class order, matching by name.
pub fn align_labels(ds: Dataset, class_names: &[String]) -> anyhow::Result<Dataset> {
    if ds.class_names() == class_names {
        return Ok(ds);
    }
    let map: Vec<usize> = ds
        .class_names()
        .iter()
        .map(|n| {
            class_names
                .iter()
                .position(|m| m == n)
                .ok_or_else(|| anyhow!("class `{n}` is unknown to the model"))
        })
        .collect::<anyhow::Result<_>>()?;
    let labels = ds.labels().iter().map(|&y| map[y]).collect();
    let mut out = Dataset::with_absent_classes(ds.features().to_owned(), labels, class_names.len())?
        .with_class_names(class_names.to_vec())?;
    if let Some(names) = ds.feature_names() {
        out = out.with_feature_names(names.to_vec())?;
    }
    Ok(out)
}
