use std::path::PathBuf;
use std::str::FromStr;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use gmc::budgeting::{InitStrategy, DEFAULT_CAP};
use gmc::recipe::FINAL_RFF_DIM;
use gmc::training::LrSchedule;
use gmc::{LiftMode, PlanesSpec, RecipeConfig};

#[derive(Debug, Parser)]
#[command(name = "gmc", version, about = "Geometric mixture classifier")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic dataset.
    Generate(GenerateArgs),
    /// Split a dataset 60/20/20, fit on train, calibrate on validation.
    Fit(FitArgs),
    /// Class probabilities for every row.
    Predict(PredictArgs),
    /// Accuracy, macro-F1, ECE, responsibility statistics and plane usage.
    Evaluate(EvaluateArgs),
    /// Fit a temperature on labeled data and store it in the model file.
    Calibrate(CalibrateArgs),
    /// Multi-seed benchmark suite plus the latency scaling sweep.
    Bench(BenchArgs),
    /// Interpretability bundle: usage tables, saliency, grids, reliability.
    Inspect(InspectArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Part {
    All,
    Train,
    Val,
    Test,
}

impl Part {
    pub fn name(self) -> &'static str {
        match self {
            Part::All => "all",
            Part::Train => "train",
            Part::Val => "val",
            Part::Test => "test",
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// Generator name (moons, circles, spirals, aniso) or CSV path.
    #[arg(long)]
    pub dataset: String,
    /// Sample count for a generator; defaults to the generator's own.
    #[arg(long)]
    pub size: Option<usize>,
    /// Label column of a CSV file, by header name or zero-based index.
    #[arg(long, default_value = "label")]
    pub label_column: String,
    /// The CSV file has no header row.
    #[arg(long)]
    pub no_header: bool,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub dataset: String,
    #[arg(long)]
    pub size: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LiftArg {
    Auto,
    Linear,
    Rff,
}

/// `auto` or a fixed per-class count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlanesArg {
    Auto,
    Fixed(usize),
}

impl FromStr for PlanesArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "auto" {
            return Ok(PlanesArg::Auto);
        }
        s.parse()
            .map(PlanesArg::Fixed)
            .map_err(|_| format!("expected `auto` or a count, got `{s}`"))
    }
}

#[derive(Debug, Clone, Args, Default)]
pub struct RecipeArgs {
    /// JSON recipe; missing fields take defaults, flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub lift: Option<LiftArg>,
    /// RFF frequency count for `--lift rff`, or of the final map under `--lift auto`.
    #[arg(long)]
    pub rff_dim: Option<usize>,
    #[arg(long)]
    pub rff_gamma: Option<f64>,
    /// Keep principal components up to this explained-variance fraction.
    #[arg(long)]
    pub pca_variance: Option<f64>,
    #[arg(long)]
    pub planes: Option<PlanesArg>,
    /// Largest automatic per-class budget.
    #[arg(long)]
    pub planes_cap: Option<usize>,
    #[arg(long, value_parser = parse_init)]
    pub init: Option<InitStrategy>,
    /// Logistic-regression init jitter, relative to the weight norm.
    #[arg(long)]
    pub noise_scale: Option<f64>,
    /// Skip temperature scaling.
    #[arg(long)]
    pub no_calibrate: bool,
    /// Fixed pooling temperature; sets both ends of the schedule.
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub alpha_start: Option<f64>,
    #[arg(long)]
    pub alpha_end: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub label_smoothing: Option<f64>,
    /// Comma-separated per-class loss weights.
    #[arg(long, value_delimiter = ',')]
    pub class_weights: Option<Vec<f64>>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long, alias = "lr")]
    pub learning_rate: Option<f64>,
    #[arg(long, value_parser = parse_schedule)]
    pub lr_schedule: Option<LrSchedule>,
    #[arg(long)]
    pub max_epochs: Option<usize>,
    #[arg(long)]
    pub patience: Option<usize>,
    #[arg(long)]
    pub min_improvement: Option<f64>,
    #[arg(long)]
    pub clip_norm: Option<f64>,
    #[arg(long)]
    pub usage_momentum: Option<f64>,
}

fn parse_init(s: &str) -> Result<InitStrategy, String> {
    s.parse().map_err(|e: gmc::GmcError| e.to_string())
}

fn parse_schedule(s: &str) -> Result<LrSchedule, String> {
    s.parse().map_err(|e: gmc::GmcError| e.to_string())
}

impl RecipeArgs {
    /// Defaults, then the `--config` file, then individual flags.
    pub fn resolve(&self, seed: u64) -> anyhow::Result<RecipeConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
            }
            None => RecipeConfig::default(),
        };
        cfg.seed = seed;
        match self.lift {
            Some(LiftArg::Linear) => cfg.lift = LiftMode::Linear,
            Some(LiftArg::Auto) => cfg.lift = LiftMode::Auto,
            Some(LiftArg::Rff) => {
                let Some(gamma) = self.rff_gamma else {
                    bail!("--lift rff needs --rff-gamma");
                };
                cfg.lift = LiftMode::Rff {
                    dim: self.rff_dim.unwrap_or(FINAL_RFF_DIM),
                    gamma,
                };
            }
            None => {}
        }
        if let LiftMode::Auto = cfg.lift {
            if let Some(d) = self.rff_dim {
                cfg.final_rff_dim = d;
            }
            if self.rff_gamma.is_some() {
                bail!("--rff-gamma needs --lift rff");
            }
        }
        if self.pca_variance.is_some() {
            cfg.pca_variance = self.pca_variance;
        }
        match (self.planes, self.planes_cap) {
            (Some(PlanesArg::Fixed(m)), None) => cfg.planes = PlanesSpec::Fixed { per_class: m },
            (Some(PlanesArg::Fixed(_)), Some(_)) => bail!("--planes-cap only applies to --planes auto"),
            (Some(PlanesArg::Auto), cap) => cfg.planes = PlanesSpec::Auto { cap: cap.unwrap_or(DEFAULT_CAP) },
            (None, Some(cap)) => cfg.planes = PlanesSpec::Auto { cap },
            (None, None) => {}
        }
        if let Some(init) = self.init {
            cfg.init = init;
        }
        if let Some(v) = self.noise_scale {
            cfg.noise_scale = v;
        }
        if self.no_calibrate {
            cfg.calibrate = false;
        }
        let t = &mut cfg.train;
        if let Some(a) = self.alpha {
            if self.alpha_start.is_some() || self.alpha_end.is_some() {
                bail!("--alpha conflicts with --alpha-start/--alpha-end");
            }
            t.alpha_start = a;
            t.alpha_end = a;
        }
        let set = |slot: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *slot = v;
            }
        };
        set(&mut t.alpha_start, self.alpha_start);
        set(&mut t.alpha_end, self.alpha_end);
        set(&mut t.lambda, self.lambda);
        set(&mut t.beta, self.beta);
        set(&mut t.delta, self.delta);
        set(&mut t.label_smoothing, self.label_smoothing);
        set(&mut t.learning_rate, self.learning_rate);
        set(&mut t.min_improvement, self.min_improvement);
        set(&mut t.clip_norm, self.clip_norm);
        set(&mut t.usage_momentum, self.usage_momentum);
        if let Some(w) = &self.class_weights {
            t.class_weights = Some(w.clone());
        }
        if let Some(v) = self.batch_size {
            t.batch_size = v;
        }
        if let Some(v) = self.lr_schedule {
            t.lr_schedule = v;
        }
        if let Some(v) = self.max_epochs {
            t.max_epochs = v;
        }
        if let Some(v) = self.patience {
            t.patience = v;
        }
        t.seed = seed;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub recipe: RecipeArgs,
    /// Seeds data generation, the split and every stochastic fit stage.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory for model.json, train_log.csv and summary.txt.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub data: DataArgs,
    /// Split to predict on; `all` uses every row.
    #[arg(long, value_enum, default_value_t = Part::All)]
    pub split: Part,
    /// Data and split seed; defaults to the model's training seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Pooling α for inference; defaults to the trained value.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Treat every CSV column as a feature.
    #[arg(long)]
    pub unlabeled: bool,
    /// Ignore the stored temperature.
    #[arg(long)]
    pub uncalibrated: bool,
    /// Write here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_enum, default_value_t = Part::Test)]
    pub split: Part,
    /// Data and split seed; defaults to the model's training seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Pooling α for inference; defaults to the trained value.
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_enum, default_value_t = Part::Val)]
    pub split: Part,
    /// Data and split seed; defaults to the model's training seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Calibrated model path; defaults to rewriting `--model`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_values_t = ["moons".to_string(), "circles".into(), "spirals".into(), "aniso".into()])]
    pub datasets: Vec<String>,
    #[arg(long, value_delimiter = ',', default_values_t = [0u64, 1, 2])]
    pub seeds: Vec<u64>,
    #[arg(long)]
    pub size: Option<usize>,
    #[command(flatten)]
    pub recipe: RecipeArgs,
    /// Minimum timed inferences per latency measurement.
    #[arg(long)]
    pub latency_inferences: Option<usize>,
    /// Time budget per latency measurement in milliseconds.
    #[arg(long)]
    pub latency_budget_ms: Option<u64>,
    /// Skip the plane-count scaling sweep.
    #[arg(long)]
    pub no_sweep: bool,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_enum, default_value_t = Part::Test)]
    pub split: Part,
    /// Data and split seed; defaults to the model's training seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Pooling α for inference; defaults to the trained value.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Features listed per plane in the saliency table.
    #[arg(long, default_value_t = 5)]
    pub top_k: usize,
    /// Grid cells per axis for 2-D maps.
    #[arg(long, default_value_t = gmc::diagnostics::DEFAULT_RESOLUTION)]
    pub resolution: usize,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}
