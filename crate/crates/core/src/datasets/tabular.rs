//! CSV ingestion and export.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use ndarray::Array2;

use super::Dataset;
use crate::error::{GmcError, Result};

/// Which column holds the class label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LabelColumn {
    Name(String),
    /// Zero-based column index.
    Index(usize),
}

impl Default for LabelColumn {
    fn default() -> Self {
        LabelColumn::Name("label".into())
    }
}

impl FromStr for LabelColumn {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s.parse::<usize>() {
            Ok(i) => LabelColumn::Index(i),
            Err(_) => LabelColumn::Name(s.to_string()),
        })
    }
}

fn csv_err(row: usize, column: impl Into<String>, message: impl Into<String>) -> GmcError {
    GmcError::Csv {
        row,
        column: column.into(),
        message: message.into(),
    }
}

pub fn load_csv(path: impl AsRef<Path>, label: &LabelColumn, has_header: bool) -> Result<Dataset> {
    let file = File::open(path.as_ref())?;
    read_csv(file, label, has_header)
}

/// Parse comma-separated data. Labels are re-encoded to `0..C` in order of
/// first appearance and the original strings kept as class names. Rows in
/// errors are 1-based file lines.
pub fn read_csv<R: Read>(reader: R, label: &LabelColumn, has_header: bool) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let header: Option<Vec<String>> = if has_header {
        let h = rdr
            .headers()
            .map_err(|e| csv_err(1, "-", e.to_string()))?
            .iter()
            .map(str::to_string)
            .collect::<Vec<_>>();
        if h.is_empty() || (h.len() == 1 && h[0].is_empty()) {
            return Err(csv_err(1, "-", "empty file"));
        }
        Some(h)
    } else {
        None
    };

    let mut label_idx: Option<usize> = None;
    let mut width: Option<usize> = header.as_ref().map(Vec::len);
    if let Some(h) = &header {
        label_idx = Some(resolve_label(label, h.len(), Some(h))?);
    }

    let mut values = Vec::new();
    let mut raw_labels: Vec<String> = Vec::new();
    let mut rows = 0usize;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            csv_err(line, "-", e.to_string())
        })?;
        let line = rec.position().map_or(rows + 1, |p| p.line() as usize);
        let w = *width.get_or_insert(rec.len());
        if rec.len() != w {
            return Err(csv_err(
                line,
                "-",
                format!("expected {w} fields, found {}", rec.len()),
            ));
        }
        let li = match label_idx {
            Some(i) => i,
            None => *label_idx.insert(resolve_label(label, w, None)?),
        };
        for (j, cell) in rec.iter().enumerate() {
            if j == li {
                raw_labels.push(cell.to_string());
                continue;
            }
            let v: f64 = cell.parse().map_err(|_| {
                let col = header
                    .as_ref()
                    .map_or_else(|| j.to_string(), |h| format!("{} ({j})", h[j]));
                csv_err(line, col, format!("non-numeric feature value `{cell}`"))
            })?;
            if !v.is_finite() {
                return Err(csv_err(line, j.to_string(), "non-finite feature value"));
            }
            values.push(v);
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(csv_err(if has_header { 2 } else { 1 }, "-", "no data rows"));
    }
    let width = width.unwrap_or(0);
    let li = label_idx.unwrap_or(0);
    let dim = width - 1;

    let mut class_names: Vec<String> = Vec::new();
    let labels = raw_labels
        .into_iter()
        .map(|s| match class_names.iter().position(|n| *n == s) {
            Some(i) => i,
            None => {
                class_names.push(s);
                class_names.len() - 1
            }
        })
        .collect::<Vec<_>>();

    let features = Array2::from_shape_vec((rows, dim), values)
        .map_err(|e| GmcError::InvalidData(e.to_string()))?;
    let ds = Dataset::new(features, labels, class_names.len())?.with_class_names(class_names)?;
    match header {
        Some(h) => {
            let names = h
                .into_iter()
                .enumerate()
                .filter_map(|(j, n)| (j != li).then_some(n))
                .collect();
            ds.with_feature_names(names)
        }
        None => Ok(ds),
    }
}

fn resolve_label(label: &LabelColumn, width: usize, header: Option<&Vec<String>>) -> Result<usize> {
    match label {
        LabelColumn::Index(i) if *i < width => Ok(*i),
        LabelColumn::Index(i) => Err(csv_err(
            1,
            i.to_string(),
            format!("label column index {i} out of range (width {width})"),
        )),
        LabelColumn::Name(name) => match header {
            Some(h) => h
                .iter()
                .position(|c| c == name)
                .ok_or_else(|| csv_err(1, name.clone(), "label column not found in header")),
            None => Err(csv_err(
                1,
                name.clone(),
                "label column given by name but the file has no header",
            )),
        },
    }
}

/// Write features plus a trailing `label` column holding class names.
pub fn write_csv<W: Write>(ds: &Dataset, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = match ds.feature_names() {
        Some(n) => n.to_vec(),
        None => (0..ds.dim()).map(|j| format!("x{j}")).collect(),
    };
    header.push("label".into());
    w.write_record(&header).map_err(io_err)?;
    for (i, &y) in ds.labels().iter().enumerate() {
        let mut rec: Vec<String> = ds.row(i).iter().map(|v| format!("{v:?}")).collect();
        rec.push(ds.class_names()[y].clone());
        w.write_record(&rec).map_err(io_err)?;
    }
    w.flush()?;
    Ok(())
}

fn io_err(e: csv::Error) -> GmcError {
    GmcError::Io(std::io::Error::other(e))
}
