use std::io::Write;

use ndarray::ArrayView2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, GmcError, Result};
use crate::model::{argmax, ForwardScratch, GmcModel};

pub const DEFAULT_RESOLUTION: usize = 300;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Bounds {
    /// Bounding box of 2-D raw data, widened by 10% per side.
    pub fn from_data(x: ArrayView2<'_, f64>) -> Result<Self> {
        if x.ncols() != 2 || x.nrows() == 0 {
            return Err(invalid("bounds need non-empty 2-D data"));
        }
        let span = |j: usize| {
            let col = x.column(j);
            let lo = col.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let pad = 0.1 * (hi - lo).max(1e-9);
            (lo - pad, hi + pad)
        };
        let (x_min, x_max) = span(0);
        let (y_min, y_max) = span(1);
        Ok(Self { x_min, x_max, y_min, y_max })
    }

    fn validate(&self) -> Result<()> {
        if !(self.x_min < self.x_max && self.y_min < self.y_max) {
            return Err(invalid(format!("empty grid bounds {self:?}")));
        }
        Ok(())
    }
}

/// Model outputs on a `resolution × resolution` lattice of cell centers.
/// Cells are row-major with `y` as the outer index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridMap {
    pub bounds: Bounds,
    pub resolution: usize,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub predicted: Vec<usize>,
    /// Class whose responsibilities are stored, if any.
    pub class: Option<usize>,
    /// `cells × M_c` responsibilities of `class`.
    pub responsibilities: Vec<Vec<f64>>,
}

impl GridMap {
    pub fn cell_count(&self) -> usize {
        self.resolution * self.resolution
    }

    pub fn cell_center(&self, cell: usize) -> (f64, f64) {
        (self.xs[cell % self.resolution], self.ys[cell / self.resolution])
    }

    /// Most responsible plane of `class` per cell.
    pub fn winning_planes(&self) -> Vec<usize> {
        self.responsibilities.iter().map(|a| argmax(a)).collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let err = |e: csv::Error| GmcError::Io(std::io::Error::other(e));
        let mut header = vec!["x".to_string(), "y".to_string(), "predicted".to_string()];
        if let Some(first) = self.responsibilities.first() {
            header.extend((0..first.len()).map(|m| format!("resp_{m}")));
        }
        w.write_record(&header).map_err(err)?;
        for cell in 0..self.cell_count() {
            let (x, y) = self.cell_center(cell);
            let mut rec = vec![format!("{x:?}"), format!("{y:?}"), self.predicted[cell].to_string()];
            if let Some(a) = self.responsibilities.get(cell) {
                rec.extend(a.iter().map(|v| format!("{v:?}")));
            }
            w.write_record(&rec).map_err(err)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn axis(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let step = (hi - lo) / n as f64;
    (0..n).map(|i| lo + (i as f64 + 0.5) * step).collect()
}

fn evaluate(model: &GmcModel, bounds: Bounds, resolution: usize, class: Option<usize>) -> Result<GridMap> {
    if model.input_dim() != 2 {
        return Err(GmcError::Unsupported(format!(
            "grids need a 2-D input space, model has {}",
            model.input_dim()
        )));
    }
    if resolution == 0 {
        return Err(invalid("resolution must be >= 1"));
    }
    bounds.validate()?;
    if let Some(c) = class {
        if c >= model.class_count() {
            return Err(invalid(format!("class {c} out of range")));
        }
    }
    let xs = axis(bounds.x_min, bounds.x_max, resolution);
    let ys = axis(bounds.y_min, bounds.y_max, resolution);
    let cells: Vec<(usize, Vec<f64>)> = (0..resolution * resolution)
        .into_par_iter()
        .map_init(
            || ForwardScratch::for_model(model),
            |scratch, cell| {
                let point = [xs[cell % resolution], ys[cell / resolution]];
                model.forward_into(&point, scratch)?;
                let resp = class.map_or_else(Vec::new, |c| scratch.eval.a[model.planes.range(c)].to_vec());
                Ok((argmax(&scratch.eval.p), resp))
            },
        )
        .collect::<Result<_>>()?;
    let (predicted, responsibilities): (Vec<usize>, Vec<Vec<f64>>) = cells.into_iter().unzip();
    Ok(GridMap {
        bounds,
        resolution,
        xs,
        ys,
        predicted,
        class,
        responsibilities: if class.is_some() { responsibilities } else { Vec::new() },
    })
}

/// Predicted class on every grid cell.
pub fn decision_grid(model: &GmcModel, bounds: Bounds, resolution: usize) -> Result<GridMap> {
    evaluate(model, bounds, resolution, None)
}

/// Predicted class plus the responsibilities of class `c` on every cell.
pub fn responsibility_grid(model: &GmcModel, c: usize, bounds: Bounds, resolution: usize) -> Result<GridMap> {
    evaluate(model, bounds, resolution, Some(c))
}
