//! Minibatch training of the plane parameters.

mod config;
mod fit;
mod loss;
mod optim;

pub use config::{alpha_at, lr_at, LrSchedule, TrainConfig};
pub use fit::{fit, fit_planes, EpochRecord, TrainLog};
pub use loss::{
    cross_entropy, gradients, gradients_with_coefficients, nll, smooth_targets, total_loss, usage_coefficients,
    Batch, BatchGradient, UsageTracker,
};
pub use optim::{clip_global_norm, Adam};
