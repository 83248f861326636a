use std::io::Write;

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, invalid, GmcError, Result};
use crate::model::argmax;

pub const DEFAULT_BINS: usize = 15;

pub fn accuracy(pred: &[usize], truth: &[usize]) -> Result<f64> {
    check_dim(truth.len(), pred.len())?;
    if truth.is_empty() {
        return Err(invalid("accuracy of an empty set"));
    }
    let hits = pred.iter().zip(truth).filter(|(p, t)| p == t).count();
    Ok(hits as f64 / truth.len() as f64)
}

/// Unweighted mean of per-class F1. A class with no true and no predicted
/// members scores 0.
pub fn macro_f1(pred: &[usize], truth: &[usize], class_count: usize) -> Result<f64> {
    check_dim(truth.len(), pred.len())?;
    if class_count == 0 {
        return Err(invalid("class_count must be >= 1"));
    }
    let mut tp = vec![0usize; class_count];
    let mut fp = vec![0usize; class_count];
    let mut fn_ = vec![0usize; class_count];
    for (&p, &t) in pred.iter().zip(truth) {
        if p >= class_count || t >= class_count {
            return Err(invalid(format!("label out of range for {class_count} classes")));
        }
        if p == t {
            tp[p] += 1;
        } else {
            fp[p] += 1;
            fn_[t] += 1;
        }
    }
    let total: f64 = (0..class_count)
        .map(|c| {
            let denom = 2 * tp[c] + fp[c] + fn_[c];
            if denom == 0 {
                0.0
            } else {
                2.0 * tp[c] as f64 / denom as f64
            }
        })
        .sum();
    Ok(total / class_count as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityBin {
    pub low: f64,
    pub high: f64,
    /// Mean confidence of members; 0 for an empty bin.
    pub mean_confidence: f64,
    /// Fraction of members predicted correctly; 0 for an empty bin.
    pub accuracy: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EceReport {
    pub bins: Vec<ReliabilityBin>,
    pub ece: f64,
}

impl EceReport {
    pub fn bin_count(&self) -> usize {
        self.bins.len()
    }

    pub fn total(&self) -> usize {
        self.bins.iter().map(|b| b.count).sum()
    }
}

fn validate_probs(probs: ArrayView2<'_, f64>, truth: &[usize]) -> Result<()> {
    check_dim(probs.nrows(), truth.len())?;
    if truth.is_empty() {
        return Err(invalid("no samples"));
    }
    for (i, row) in probs.rows().into_iter().enumerate() {
        if row.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
            return Err(GmcError::InvalidData(format!("row {i} has entries outside [0, 1]")));
        }
        if (row.sum() - 1.0).abs() > 1e-6 {
            return Err(GmcError::InvalidData(format!("row {i} does not sum to 1")));
        }
        if truth[i] >= row.len() {
            return Err(invalid(format!("label {} out of range", truth[i])));
        }
    }
    Ok(())
}

/// Reliability-diagram rows: equal-width confidence bins over `[0, 1]`,
/// with confidence 1 placed in the top bin.
pub fn reliability_data(probs: ArrayView2<'_, f64>, truth: &[usize], bins: usize) -> Result<Vec<ReliabilityBin>> {
    validate_probs(probs, truth)?;
    if bins == 0 {
        return Err(invalid("need at least one bin"));
    }
    let mut conf_sum = vec![0.0; bins];
    let mut hits = vec![0usize; bins];
    let mut counts = vec![0usize; bins];
    for (row, &t) in probs.rows().into_iter().zip(truth) {
        let row = row.to_vec();
        let pred = argmax(&row);
        let conf = row[pred];
        let b = ((conf * bins as f64).floor() as usize).min(bins - 1);
        conf_sum[b] += conf;
        counts[b] += 1;
        hits[b] += usize::from(pred == t);
    }
    Ok((0..bins)
        .map(|b| {
            let n = counts[b];
            ReliabilityBin {
                low: b as f64 / bins as f64,
                high: (b + 1) as f64 / bins as f64,
                mean_confidence: if n == 0 { 0.0 } else { conf_sum[b] / n as f64 },
                accuracy: if n == 0 { 0.0 } else { hits[b] as f64 / n as f64 },
                count: n,
            }
        })
        .collect())
}

/// Count-weighted mean gap between accuracy and confidence.
pub fn ece_from_bins(bins: &[ReliabilityBin]) -> f64 {
    let total: usize = bins.iter().map(|b| b.count).sum();
    if total == 0 {
        return 0.0;
    }
    bins.iter()
        .map(|b| b.count as f64 / total as f64 * (b.accuracy - b.mean_confidence).abs())
        .sum()
}

pub fn ece(probs: ArrayView2<'_, f64>, truth: &[usize], bins: usize) -> Result<EceReport> {
    let bins = reliability_data(probs, truth, bins)?;
    let ece = ece_from_bins(&bins);
    Ok(EceReport { bins, ece })
}

pub fn write_reliability_csv<W: Write>(bins: &[ReliabilityBin], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| GmcError::Io(std::io::Error::other(e));
    w.write_record(["bin_low", "bin_high", "mean_conf", "accuracy", "count"]).map_err(err)?;
    for b in bins {
        w.write_record([
            format!("{:?}", b.low),
            format!("{:?}", b.high),
            format!("{:?}", b.mean_confidence),
            format!("{:?}", b.accuracy),
            b.count.to_string(),
        ])
        .map_err(err)?;
    }
    w.flush()?;
    Ok(())
}
