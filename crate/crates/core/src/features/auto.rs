use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{FeaturePipeline, PipelineConfig};
use crate::budgeting::{init_auto, PlaneBudget};
use crate::datasets::Dataset;
use crate::error::{invalid, GmcError, Result};
use crate::training::{fit_planes, nll, TrainConfig};

/// RFF bandwidths tried in auto mode.
pub const AUTO_GAMMA_GRID: [f64; 4] = [0.25, 0.5, 1.0, 2.0];
/// Frequency count for probe candidates.
pub const PROBE_RFF_DIM: usize = 512;

/// Short training run used to rank candidate feature maps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProbeConfig {
    pub epochs: usize,
    pub alpha: f64,
    pub planes_per_class: usize,
    /// Candidates within this many nats of the best count as tied.
    pub tie_tolerance: f64,
    /// Remaining optimizer settings.
    pub train: TrainConfig,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            epochs: 30,
            alpha: 4.0,
            planes_per_class: 2,
            tie_tolerance: 0.01,
            train: TrainConfig::default(),
        }
    }
}

impl ProbeConfig {
    fn train_config(&self) -> TrainConfig {
        TrainConfig {
            alpha_start: self.alpha,
            alpha_end: self.alpha,
            max_epochs: self.epochs,
            patience: self.epochs.max(1),
            ..self.train.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateScore {
    pub config: PipelineConfig,
    pub output_dim: usize,
    /// Mean validation log-likelihood; `None` if the probe failed.
    pub log_likelihood: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct LiftSelection {
    pub pipeline: FeaturePipeline,
    pub index: usize,
    pub scores: Vec<CandidateScore>,
}

/// The linear map plus one RFF candidate per grid bandwidth.
pub fn auto_candidates(pca_variance: Option<f64>, seed: u64) -> Vec<PipelineConfig> {
    let mut out = vec![PipelineConfig {
        pca_variance,
        ..PipelineConfig::linear()
    }];
    for gamma in AUTO_GAMMA_GRID {
        out.push(PipelineConfig {
            pca_variance,
            ..PipelineConfig::with_rff(PROBE_RFF_DIM, gamma, seed)
        });
    }
    out
}

fn probe(train: &Dataset, val: &Dataset, cfg: &PipelineConfig, probe: &ProbeConfig) -> Result<(FeaturePipeline, f64)> {
    let pipeline = FeaturePipeline::fit(train.features(), cfg)?;
    let tr = pipeline.apply(train.features())?;
    let va = pipeline.apply(val.features())?;
    let budget = PlaneBudget::uniform(train.class_count(), probe.planes_per_class)?;
    let tc = probe.train_config();
    let init = init_auto(tr.view(), train.labels(), &budget, 0.05, tc.seed)?;
    let (planes, log) = fit_planes(tr.view(), train.labels(), va.view(), val.labels(), init.planes, &tc)?;
    if log.diverged {
        return Err(GmcError::Diverged { epoch: log.epochs.len() });
    }
    let ll = -nll(va.view(), val.labels(), &planes, probe.alpha)?;
    if !ll.is_finite() {
        return Err(GmcError::NonFinite("probe log-likelihood".into()));
    }
    Ok((pipeline, ll))
}

/// Fits a probe model per candidate and keeps the one with the highest
/// validation log-likelihood, preferring the smaller output width among
/// near-ties.
pub fn auto_select_lift(
    train: &Dataset,
    val: &Dataset,
    candidates: &[PipelineConfig],
    probe_cfg: &ProbeConfig,
) -> Result<LiftSelection> {
    if candidates.is_empty() {
        return Err(invalid("no lift candidates"));
    }
    if train.class_count() != val.class_count() || train.dim() != val.dim() {
        return Err(invalid("training and validation sets disagree in shape"));
    }
    let results: Vec<Option<(FeaturePipeline, f64)>> = candidates
        .par_iter()
        .map(|cfg| probe(train, val, cfg, probe_cfg).ok())
        .collect();
    let scores: Vec<CandidateScore> = candidates
        .iter()
        .zip(&results)
        .map(|(cfg, r)| CandidateScore {
            config: *cfg,
            output_dim: r.as_ref().map_or(0, |(p, _)| p.output_dim()),
            log_likelihood: r.as_ref().map(|(_, ll)| *ll),
        })
        .collect();
    let best = scores
        .iter()
        .filter_map(|s| s.log_likelihood)
        .fold(f64::NEG_INFINITY, f64::max);
    if best == f64::NEG_INFINITY {
        return Err(invalid("every lift candidate failed to train"));
    }
    let index = (0..scores.len())
        .filter(|&i| scores[i].log_likelihood.is_some_and(|ll| ll >= best - probe_cfg.tie_tolerance))
        .min_by(|&a, &b| {
            let ll = |i: usize| scores[i].log_likelihood.unwrap_or(f64::NEG_INFINITY);
            scores[a].output_dim.cmp(&scores[b].output_dim).then(ll(b).total_cmp(&ll(a)))
        })
        .expect("the best candidate is within tolerance of itself");
    let pipeline = results.into_iter().nth(index).flatten().expect("scored candidate").0;
    Ok(LiftSelection { pipeline, index, scores })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::{make_circles, stratified_split, SplitSpec};

    fn quick() -> ProbeConfig {
        ProbeConfig {
            epochs: 15,
            ..Default::default()
        }
    }

    #[test]
    fn singleton_candidate() {
        let d = make_circles(300, 0.5, 0.08, 0).unwrap();
        let s = stratified_split(&d, &SplitSpec::standard(0)).unwrap();
        let sel = auto_select_lift(&s.train, &s.val, &[PipelineConfig::linear()], &quick()).unwrap();
        assert_eq!(sel.index, 0);
        assert!(!sel.pipeline.is_lifted());
    }

    #[test]
    fn circles_pick_a_lift() {
        let d = make_circles(1000, 0.5, 0.08, 0).unwrap();
        let s = stratified_split(&d, &SplitSpec::standard(0)).unwrap();
        let mut cands = vec![PipelineConfig::linear()];
        for g in [0.5, 1.0, 2.0] {
            cands.push(PipelineConfig::with_rff(PROBE_RFF_DIM, g, 0));
        }
        let sel = auto_select_lift(&s.train, &s.val, &cands, &quick()).unwrap();
        assert!(sel.pipeline.is_lifted(), "{:?}", sel.scores);
    }

    #[test]
    fn empty_candidates_error() {
        let d = make_circles(100, 0.5, 0.08, 0).unwrap();
        assert!(auto_select_lift(&d, &d, &[], &quick()).is_err());
    }
}
