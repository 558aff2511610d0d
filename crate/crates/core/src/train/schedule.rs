use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Noam-shaped learning rate clamped to `[lr_min, lr_max]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LrSchedule {
    pub lr_min: f64,
    pub lr_max: f64,
    pub warmup_steps: u64,
    /// Restart the ramp every this many steps instead of decaying once.
    pub cycle_steps: Option<u64>,
}

impl Default for LrSchedule {
    fn default() -> Self {
        LrSchedule {
            lr_min: 1e-4,
            lr_max: 1e-3,
            warmup_steps: 200,
            cycle_steps: None,
        }
    }
}

impl LrSchedule {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr_min > 0.0 && self.lr_min <= self.lr_max && self.lr_max.is_finite()) {
            return Err(Error::Config(format!(
                "need 0 < lr_min <= lr_max, got {} and {}",
                self.lr_min, self.lr_max
            )));
        }
        if self.warmup_steps == 0 || self.cycle_steps == Some(0) {
            return Err(Error::Config("warmup_steps and cycle_steps must be positive".into()));
        }
        Ok(())
    }
}

/// `clamp(lr_max * min(step / W, sqrt(W / step)), lr_min, lr_max)` for the
/// 1-based optimizer `step`; with `cycle_steps = Some(c)` the step counter
/// wraps every `c` steps. Step 0 is treated as step 1.
pub fn noam_cyclic_lr(step: u64, s: &LrSchedule) -> f64 {
    let step = step.max(1);
    let step = match s.cycle_steps {
        Some(c) => (step - 1) % c + 1,
        None => step,
    };
    let (t, w) = (step as f64, s.warmup_steps as f64);
    (s.lr_max * (t / w).min((w / t).sqrt())).clamp(s.lr_min, s.lr_max)
}
