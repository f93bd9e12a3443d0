use serde::{Deserialize, Serialize};

use super::TrainError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub base_lr: f64,
    /// Rate for the last third of the steps.
    pub late_lr: f64,
    /// Dev evaluation interval in steps; every epoch end is evaluated too.
    pub eval_every: usize,
    pub seed: u64,
    /// Transfer stage 1: classifier-only epochs and their learning rate.
    pub head_warmup_epochs: usize,
    pub head_lr: f64,
    /// Optional global gradient-norm ceiling.
    pub clip_norm: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 10,
            batch_size: 32,
            base_lr: 1e-4,
            late_lr: 1e-5,
            eval_every: 100,
            seed: 42,
            head_warmup_epochs: 3,
            head_lr: 0.01,
            clip_norm: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |m: &str| Err(TrainError::Config(m.to_string()));
        if self.epochs == 0 {
            return bad("epochs must be positive");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be positive");
        }
        if self.eval_every == 0 {
            return bad("eval_every must be positive");
        }
        if !(self.base_lr > 0.0 && self.late_lr > 0.0 && self.head_lr > 0.0) {
            return bad("learning rates must be positive");
        }
        if self.late_lr >= self.base_lr {
            return bad("late_lr must be smaller than base_lr");
        }
        if let Some(c) = self.clip_norm {
            if c.is_nan() || c <= 0.0 {
                return bad("clip_norm must be positive");
            }
        }
        Ok(())
    }

    pub fn steps_per_epoch(&self, n: usize) -> usize {
        n.div_ceil(self.batch_size)
    }
}

/// `base_lr` through step `floor(2·total/3)`, `late_lr` afterwards. Steps
/// count from 1.
pub fn lr_at_step(step: u64, total_steps: u64, cfg: &TrainConfig) -> f64 {
    debug_assert!(step >= 1 && step <= total_steps);
    if step <= 2 * total_steps / 3 {
        cfg.base_lr
    } else {
        cfg.late_lr
    }
}
