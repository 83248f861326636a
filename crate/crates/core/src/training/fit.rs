use std::io::Write;

use ndarray::ArrayView2;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::loss::{gradients, nll, Batch, UsageTracker};
use super::optim::{clip_global_norm, Adam};
use super::{alpha_at, lr_at, TrainConfig};
use crate::datasets::Dataset;
use crate::error::{check_dim, invalid, GmcError, Result};
use crate::features::FeaturePipeline;
use crate::model::{GmcModel, Planes};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub alpha: f64,
    pub lr: f64,
    pub min_usage: f64,
    pub max_usage: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct TrainLog {
    pub epochs: Vec<EpochRecord>,
    /// Epoch whose parameters were returned, if any epoch completed.
    pub best_epoch: Option<usize>,
    pub best_val_loss: f64,
    pub stopped_early: bool,
    pub diverged: bool,
    /// Usage tracker state at the end of training.
    pub final_usage: Vec<f64>,
}

impl TrainLog {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let csv_err = |e: csv::Error| GmcError::Io(std::io::Error::other(e));
        w.write_record(["epoch", "train_loss", "val_loss", "alpha", "lr"]).map_err(csv_err)?;
        for r in &self.epochs {
            w.write_record([
                r.epoch.to_string(),
                format!("{:?}", r.train_loss),
                format!("{:?}", r.val_loss),
                format!("{:?}", r.alpha),
                format!("{:?}", r.lr),
            ])
            .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Best validation loss seen up to and including each epoch.
    pub fn best_so_far(&self) -> Vec<f64> {
        let mut best = f64::INFINITY;
        self.epochs
            .iter()
            .map(|r| {
                best = best.min(r.val_loss);
                best
            })
            .collect()
    }
}

/// Trains `init` on already-mapped features. Returns the parameters with
/// the lowest validation NLL and the per-epoch log.
pub fn fit_planes(
    train_phi: ArrayView2<'_, f64>,
    train_labels: &[usize],
    val_phi: ArrayView2<'_, f64>,
    val_labels: &[usize],
    init: Planes,
    cfg: &TrainConfig,
) -> Result<(Planes, TrainLog)> {
    cfg.validate(init.class_count())?;
    check_dim(init.dim(), train_phi.ncols())?;
    check_dim(init.dim(), val_phi.ncols())?;
    check_dim(train_phi.nrows(), train_labels.len())?;
    check_dim(val_phi.nrows(), val_labels.len())?;
    if train_labels.is_empty() || val_labels.is_empty() {
        return Err(invalid("training and validation sets must be non-empty"));
    }
    init.ensure_finite("initial planes")?;
    let train_phi = train_phi.as_standard_layout();
    let val_phi = val_phi.as_standard_layout();

    let mut planes = init;
    let mut adam = Adam::new(planes.params().len());
    let mut tracker = UsageTracker::new(&planes, cfg.usage_momentum);
    let mut shuffle_rng = rng::seeded(cfg.seed, rng::stream::SHUFFLE);
    let mut order: Vec<usize> = (0..train_labels.len()).collect();
    let mut log = TrainLog {
        best_val_loss: f64::INFINITY,
        ..Default::default()
    };
    let mut best: Option<Planes> = None;
    let mut since_best = 0;

    'epochs: for epoch in 0..cfg.max_epochs {
        let alpha = alpha_at(cfg, epoch, cfg.max_epochs);
        let lr = lr_at(cfg.lr_schedule, cfg.learning_rate, epoch, cfg.max_epochs);
        order.shuffle(&mut shuffle_rng);
        let mut loss_sum = 0.0;
        for rows in order.chunks(cfg.batch_size) {
            let batch = Batch::subset(train_phi.view(), train_labels, rows);
            let mut g = match gradients(&batch, &planes, alpha, &mut tracker, cfg) {
                Ok(g) => g,
                Err(GmcError::NonFinite(_)) => {
                    log.diverged = true;
                    break 'epochs;
                }
                Err(e) => return Err(e),
            };
            clip_global_norm(g.grad.params_mut(), cfg.clip_norm);
            if adam.step(planes.params_mut(), g.grad.params(), lr).is_err() {
                log.diverged = true;
                break 'epochs;
            }
            loss_sum += g.loss * rows.len() as f64;
        }
        let val_loss = nll(val_phi.view(), val_labels, &planes, alpha)?;
        if !val_loss.is_finite() {
            log.diverged = true;
            break;
        }
        let usage = tracker.usage();
        log.epochs.push(EpochRecord {
            epoch,
            train_loss: loss_sum / train_labels.len() as f64,
            val_loss,
            alpha,
            lr,
            min_usage: usage.iter().cloned().fold(f64::INFINITY, f64::min),
            max_usage: usage.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        });
        if val_loss < log.best_val_loss - cfg.min_improvement {
            log.best_val_loss = val_loss;
            log.best_epoch = Some(epoch);
            best = Some(planes.clone());
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.patience {
                log.stopped_early = true;
                break;
            }
        }
    }
    log.final_usage = tracker.usage().to_vec();
    Ok((best.unwrap_or(planes), log))
}

/// Maps both splits through `pipeline`, trains, and wraps the result as a
/// model evaluated at `alpha_end`.
pub fn fit(
    train: &Dataset,
    val: &Dataset,
    pipeline: FeaturePipeline,
    init: Planes,
    cfg: &TrainConfig,
) -> Result<(GmcModel, TrainLog)> {
    check_dim(train.class_count(), init.class_count())?;
    check_dim(train.class_count(), val.class_count())?;
    let train_phi = pipeline.apply(train.features().view())?;
    let val_phi = pipeline.apply(val.features().view())?;
    let (planes, log) = fit_planes(train_phi.view(), train.labels(), val_phi.view(), val.labels(), init, cfg)?;
    let model = GmcModel::new(pipeline, planes, cfg.alpha_end, train.class_names().to_vec())?;
    Ok((model, log))
}
