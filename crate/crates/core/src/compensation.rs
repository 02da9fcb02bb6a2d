//! Threshold-gated acceleration compensation for the lead/lag offset.
//!
//! Inside the dead band `|dp| <= threshold` no correction is applied. Outside
//! it, the constant acceleration that would move the offset exactly onto the
//! band edge within one window `T` is commanded:
//!
//! ```text
//! a = -2 (dp - threshold) / T²   for dp >  threshold  (lead: slow down)
//! a = -2 (dp + threshold) / T²   for dp < -threshold  (lag: speed up)
//! ```
//!
//! and then clamped to `[a_min, a_max]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CompensationConfig {
    /// Half-width of the dead band, meters.
    pub threshold_m: f64,
    /// Correction window, seconds.
    pub window_s: f64,
    pub a_min: f64,
    pub a_max: f64,
    pub enabled: bool,
}

impl Default for CompensationConfig {
    fn default() -> Self {
        Self {
            threshold_m: 0.5,
            window_s: 1.0,
            a_min: -3.0,
            a_max: 3.0,
            enabled: true,
        }
    }
}

impl CompensationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.threshold_m > 0.0 && self.threshold_m.is_finite()) {
            return Err(Error::config("compensation.threshold_m", "must be > 0"));
        }
        if !(self.window_s > 0.0 && self.window_s.is_finite()) {
            return Err(Error::config("compensation.window_s", "must be > 0"));
        }
        if !(self.a_min < 0.0 && self.a_min.is_finite()) {
            return Err(Error::config("compensation.a_min", "must be < 0"));
        }
        if !(self.a_max > 0.0 && self.a_max.is_finite()) {
            return Err(Error::config("compensation.a_max", "must be > 0"));
        }
        Ok(())
    }
}

/// Compensation before clamping. Exposed for the closure identity.
pub fn raw_compensation_accel(dp: f64, threshold: f64, window: f64) -> f64 {
    let w2 = window * window;
    if dp > threshold {
        -2.0 * (dp - threshold) / w2
    } else if dp < -threshold {
        -2.0 * (dp + threshold) / w2
    } else {
        0.0
    }
}

pub fn compensation_accel(dp: f64, cfg: &CompensationConfig) -> Result<f64> {
    if !dp.is_finite() {
        return Err(Error::InvalidInput(format!("non-finite lead/lag offset {dp}")));
    }
    let a = raw_compensation_accel(dp, cfg.threshold_m, cfg.window_s);
    Ok(a.clamp(cfg.a_min, cfg.a_max))
}
