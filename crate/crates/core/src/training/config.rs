use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, GmcError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum LrSchedule {
    #[default]
    Cosine,
    Exponential,
}

impl FromStr for LrSchedule {
    type Err = GmcError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cosine" => Ok(Self::Cosine),
            "exponential" | "exp" => Ok(Self::Exponential),
            other => Err(invalid(format!("unknown lr schedule `{other}`"))),
        }
    }
}

/// Every knob of the fit loop. Defaults are the reference recipe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub alpha_start: f64,
    pub alpha_end: f64,
    /// Base L2 strength λ.
    pub lambda: f64,
    /// Usage penalty β.
    pub beta: f64,
    /// Usage floor δ.
    pub delta: f64,
    pub label_smoothing: f64,
    pub class_weights: Option<Vec<f64>>,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub lr_schedule: LrSchedule,
    pub max_epochs: usize,
    pub patience: usize,
    /// Minimum validation-loss decrease that counts as improvement.
    pub min_improvement: f64,
    pub clip_norm: f64,
    pub usage_momentum: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            alpha_start: 3.0,
            alpha_end: 6.0,
            lambda: 1e-4,
            beta: 0.5,
            delta: 1e-3,
            label_smoothing: 0.02,
            class_weights: None,
            batch_size: 256,
            learning_rate: 1e-2,
            lr_schedule: LrSchedule::Cosine,
            max_epochs: 300,
            patience: 12,
            min_improvement: 1e-5,
            clip_norm: 5.0,
            usage_momentum: 0.9,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self, class_count: usize) -> Result<()> {
        let nonneg = [
            ("lambda", self.lambda),
            ("beta", self.beta),
            ("learning_rate", self.learning_rate),
            ("min_improvement", self.min_improvement),
        ];
        for (name, v) in nonneg {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(invalid(format!("{name} must be >= 0, got {v}")));
            }
        }
        if !(self.delta > 0.0) {
            return Err(invalid(format!("delta must be > 0, got {}", self.delta)));
        }
        if !(0.0..1.0).contains(&self.label_smoothing) {
            return Err(invalid(format!(
                "label_smoothing must lie in [0, 1), got {}",
                self.label_smoothing
            )));
        }
        if !(self.alpha_start > 0.0 && self.alpha_start <= self.alpha_end && self.alpha_end.is_finite()) {
            return Err(invalid(format!(
                "need 0 < alpha_start <= alpha_end, got {} -> {}",
                self.alpha_start, self.alpha_end
            )));
        }
        if self.patience == 0 || self.batch_size == 0 || self.max_epochs == 0 {
            return Err(invalid("patience, batch_size and max_epochs must be >= 1"));
        }
        if !(self.clip_norm > 0.0) {
            return Err(invalid("clip_norm must be > 0"));
        }
        if !(0.0..1.0).contains(&self.usage_momentum) {
            return Err(invalid("usage_momentum must lie in [0, 1)"));
        }
        if let Some(w) = &self.class_weights {
            if w.len() != class_count {
                return Err(GmcError::DimensionMismatch {
                    expected: class_count,
                    actual: w.len(),
                });
            }
            if w.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
                return Err(invalid("class weights must be positive"));
            }
        }
        Ok(())
    }
}

/// Learning rate at `epoch`. Cosine decays to zero at `max_epochs`;
/// exponential multiplies by 0.97 per epoch.
pub fn lr_at(schedule: LrSchedule, base_lr: f64, epoch: usize, max_epochs: usize) -> f64 {
    match schedule {
        LrSchedule::Cosine => {
            let t = epoch as f64 / max_epochs.max(1) as f64;
            base_lr * 0.5 * (1.0 + (std::f64::consts::PI * t).cos())
        }
        LrSchedule::Exponential => base_lr * 0.97f64.powi(epoch as i32),
    }
}

/// Pooling temperature at `epoch`: a linear ramp from `alpha_start` to
/// `alpha_end` over the first half of training, then flat.
pub fn alpha_at(cfg: &TrainConfig, epoch: usize, max_epochs: usize) -> f64 {
    let half = max_epochs as f64 / 2.0;
    if half <= 0.0 {
        return cfg.alpha_end;
    }
    let t = (epoch as f64 / half).min(1.0);
    cfg.alpha_start + (cfg.alpha_end - cfg.alpha_start) * t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cosine_endpoints() {
        assert_eq!(lr_at(LrSchedule::Cosine, 0.01, 0, 300), 0.01);
        assert!(lr_at(LrSchedule::Cosine, 0.01, 300, 300).abs() < 1e-18);
        assert!((lr_at(LrSchedule::Cosine, 0.01, 150, 300) - 0.005).abs() < 1e-15);
        assert!((lr_at(LrSchedule::Exponential, 0.01, 2, 300) - 0.01 * 0.97 * 0.97).abs() < 1e-15);
    }

    #[test]
    fn alpha_ramp() {
        let cfg = TrainConfig::default();
        assert_eq!(alpha_at(&cfg, 0, 300), 3.0);
        assert_eq!(alpha_at(&cfg, 150, 300), 6.0);
        assert_eq!(alpha_at(&cfg, 299, 300), 6.0);
        assert_eq!(alpha_at(&cfg, 75, 300), 4.5);
    }

    #[test]
    fn validation() {
        assert!(TrainConfig::default().validate(2).is_ok());
        let bad = [
            TrainConfig { label_smoothing: 1.0, ..Default::default() },
            TrainConfig { alpha_start: 7.0, ..Default::default() },
            TrainConfig { patience: 0, ..Default::default() },
            TrainConfig { delta: 0.0, ..Default::default() },
            TrainConfig { lambda: -1.0, ..Default::default() },
            TrainConfig { class_weights: Some(vec![1.0]), ..Default::default() },
        ];
        for cfg in bad {
            assert!(cfg.validate(2).is_err(), "{cfg:?}");
        }
    }
}
