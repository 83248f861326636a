//! Geometric mixture classifier.
//!
//! Each class owns a small set of hyperplanes in a working feature space
//! `φ(x)` (standardized inputs, optionally PCA-reduced and lifted with random
//! Fourier features). A class score is the soft-OR of its plane scores,
//!
//! ```text
//! z_{c,m}(x) = w_{c,m}·φ(x) + b_{c,m}
//! s_c(x)     = (1/α) log Σ_m exp(α z_{c,m}(x))
//! p_c(x)     = softmax_c s_c(x)
//! ```
//!
//! and the within-class softmax of `α z` gives each plane's responsibility
//! for the input. With one plane per class the model is multinomial
//! logistic regression.
//!
//! Modules follow the fitting pipeline:
//!
//! - [`datasets`]: synthetic generators, CSV ingestion, stratified splits
//! - [`features`]: standardize / PCA / RFF pipeline and lift selection
//! - [`budgeting`]: silhouette plane budgets and parameter initialization
//! - [`training`]: loss, gradients, Adam, schedules, early stopping
//! - [`calibration`]: accuracy, macro-F1, ECE, temperature scaling
//! - [`diagnostics`]: responsibility statistics, plane usage, saliency, grids
//! - [`recipe`]: the end-to-end fit
//! - [`persist`]: versioned JSON model files
//! - [`harness`]: multi-seed benchmark suite and latency measurement

// `!(x > 0.0)` also rejects NaN; index loops follow the math.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod budgeting;
pub mod calibration;
pub mod datasets;
pub mod diagnostics;
mod error;
pub mod features;
pub mod harness;
pub mod model;
pub mod persist;
pub mod recipe;
mod rng;
pub mod training;

pub use datasets::{Dataset, SplitSpec};
pub use error::{GmcError, Result};
pub use features::{FeaturePipeline, PipelineConfig};
pub use model::{ForwardResult, GmcModel, Planes};
pub use recipe::{fit_recipe, FitOutcome, LiftMode, PlanesSpec, RecipeConfig};
pub use training::{TrainConfig, TrainLog};
