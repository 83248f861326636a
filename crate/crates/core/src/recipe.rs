//! The end-to-end fit: feature map, plane budget, initialization,
//! training and optional temperature scaling.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::budgeting::{initialize, InitSpec, InitStrategy, PlaneBudget, DEFAULT_CAP};
use crate::calibration::{fit_temperature, TemperatureFit};
use crate::datasets::Dataset;
use crate::error::{invalid, Result};
use crate::features::{auto_candidates, auto_select_lift, CandidateScore, FeaturePipeline, PipelineConfig, ProbeConfig};
use crate::model::GmcModel;
use crate::training::{fit_planes, TrainConfig, TrainLog};

/// Frequency count of the final RFF map when the lift is chosen
/// automatically.
pub const FINAL_RFF_DIM: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LiftMode {
    Linear,
    Rff { dim: usize, gamma: f64 },
    /// Probe linear and the RFF bandwidth grid, keep the best on validation.
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PlanesSpec {
    /// Silhouette-driven budget with at most `cap` planes per class.
    Auto { cap: usize },
    /// The same count for every class.
    Fixed { per_class: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RecipeConfig {
    pub lift: LiftMode,
    pub pca_variance: Option<f64>,
    pub planes: PlanesSpec,
    pub init: InitStrategy,
    pub noise_scale: f64,
    pub train: TrainConfig,
    pub probe: ProbeConfig,
    pub final_rff_dim: usize,
    /// Fit a temperature on the validation split after training.
    pub calibrate: bool,
    /// Master seed for every stochastic stage; overrides `train.seed`.
    pub seed: u64,
}

impl Default for RecipeConfig {
    fn default() -> Self {
        Self {
            lift: LiftMode::Auto,
            pca_variance: None,
            planes: PlanesSpec::Auto { cap: DEFAULT_CAP },
            init: InitStrategy::Auto,
            noise_scale: 0.05,
            train: TrainConfig::default(),
            probe: ProbeConfig::default(),
            final_rff_dim: FINAL_RFF_DIM,
            calibrate: true,
            seed: 0,
        }
    }
}

impl RecipeConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiftReport {
    pub chosen: PipelineConfig,
    /// Probe scores when the lift was chosen automatically.
    pub candidates: Vec<CandidateScore>,
}

impl LiftReport {
    pub fn label(&self) -> String {
        match self.chosen.rff {
            Some(r) => format!("rff(D={}, gamma={})", r.dim, r.gamma),
            None => "linear".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct FitOutcome {
    pub model: GmcModel,
    pub log: TrainLog,
    pub budget: PlaneBudget,
    pub init_strategy: InitStrategy,
    pub lift: LiftReport,
    pub temperature: Option<TemperatureFit>,
    pub train_seconds: f64,
}

fn choose_pipeline(train: &Dataset, val: &Dataset, cfg: &RecipeConfig) -> Result<(FeaturePipeline, LiftReport)> {
    let fixed = |rff: Option<(usize, f64)>| PipelineConfig {
        pca_variance: cfg.pca_variance,
        rff: rff.map(|(dim, gamma)| crate::features::RffConfig { dim, gamma }),
        seed: cfg.seed,
    };
    let (chosen, candidates) = match cfg.lift {
        LiftMode::Linear => (fixed(None), Vec::new()),
        LiftMode::Rff { dim, gamma } => (fixed(Some((dim, gamma))), Vec::new()),
        LiftMode::Auto => {
            let mut probe = cfg.probe.clone();
            probe.train.seed = cfg.seed;
            let sel = auto_select_lift(train, val, &auto_candidates(cfg.pca_variance, cfg.seed), &probe)?;
            let picked = sel.scores[sel.index].config;
            let chosen = fixed(picked.rff.map(|r| (cfg.final_rff_dim, r.gamma)));
            (chosen, sel.scores)
        }
    };
    let pipeline = FeaturePipeline::fit(train.features(), &chosen)?;
    Ok((pipeline, LiftReport { chosen, candidates }))
}

/// Runs the full recipe on a train/validation pair.
pub fn fit_recipe(train: &Dataset, val: &Dataset, cfg: &RecipeConfig) -> Result<FitOutcome> {
    if train.class_count() != val.class_count() || train.dim() != val.dim() {
        return Err(invalid("training and validation sets disagree in shape"));
    }
    let start = Instant::now();
    let mut train_cfg = cfg.train.clone();
    train_cfg.seed = cfg.seed;
    train_cfg.validate(train.class_count())?;

    let (pipeline, lift) = choose_pipeline(train, val, cfg)?;
    let tr = pipeline.apply(train.features())?;
    let va = pipeline.apply(val.features())?;
    let budget = match cfg.planes {
        PlanesSpec::Fixed { per_class } => PlaneBudget::uniform(train.class_count(), per_class)?,
        PlanesSpec::Auto { cap } => {
            // Silhouette is scored before the lift: RBF features compress
            // between-cluster distances by an amount that depends on γ.
            let pre = pipeline.apply_linear(train.features())?;
            PlaneBudget::auto(pre.view(), train.labels(), train.class_count(), cap, cfg.seed)?
        }
    };
    let spec = InitSpec {
        strategy: cfg.init,
        noise_scale: cfg.noise_scale,
        seed: cfg.seed,
    };
    let init = initialize(tr.view(), train.labels(), &budget, &spec)?;
    let (planes, log) = fit_planes(tr.view(), train.labels(), va.view(), val.labels(), init.planes, &train_cfg)?;
    let model = GmcModel::new(pipeline, planes, train_cfg.alpha_end, train.class_names().to_vec())?;
    let train_seconds = start.elapsed().as_secs_f64();
    let temperature = if cfg.calibrate {
        Some(fit_temperature(model.class_scores(val.features())?.view(), val.labels())?)
    } else {
        None
    };
    Ok(FitOutcome {
        model,
        log,
        budget,
        init_strategy: init.strategy,
        lift,
        temperature,
        train_seconds,
    })
}
