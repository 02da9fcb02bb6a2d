//! Kinematic bicycle plant integrated with classic RK4.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::wrap_angle;

pub const MAX_STEP_DT: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleState {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub v: f64,
}

impl VehicleState {
    pub fn new(x: f64, y: f64, heading: f64, v: f64) -> Self {
        Self {
            x,
            y,
            heading: wrap_angle(heading),
            v: v.max(0.0),
        }
    }

    fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.heading.is_finite() && self.v.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ControlInput {
    pub accel: f64,
    /// Front-wheel angle, radians; positive turns left.
    pub steer: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VehicleParams {
    pub wheelbase: f64,
    pub max_steer: f64,
    pub max_steer_rate: f64,
    pub max_accel: f64,
    pub max_decel: f64,
}

impl Default for VehicleParams {
    fn default() -> Self {
        Self {
            wheelbase: 2.7,
            max_steer: 0.6,
            max_steer_rate: 0.7,
            max_accel: 3.0,
            max_decel: -6.0,
        }
    }
}

impl VehicleParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("vehicle.wheelbase", self.wheelbase),
            ("vehicle.max_steer", self.max_steer),
            ("vehicle.max_steer_rate", self.max_steer_rate),
            ("vehicle.max_accel", self.max_accel),
        ];
        for (key, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::config(key, "must be > 0"));
            }
        }
        if !(self.max_decel < 0.0 && self.max_decel.is_finite()) {
            return Err(Error::config("vehicle.max_decel", "must be < 0"));
        }
        Ok(())
    }

    /// Applies magnitude limits and the steer-rate limit relative to
    /// `prev_steer`.
    pub fn saturate(&self, input: ControlInput, prev_steer: f64, dt: f64) -> ControlInput {
        let accel = input.accel.clamp(self.max_decel, self.max_accel);
        let max_delta = self.max_steer_rate * dt;
        let steer = input
            .steer
            .clamp(prev_steer - max_delta, prev_steer + max_delta)
            .clamp(-self.max_steer, self.max_steer);
        ControlInput { accel, steer }
    }
}

/// Pose derivative `(ẋ, ẏ, θ̇)` at speed `v`.
fn pose_rate(heading: f64, v: f64, curvature: f64) -> [f64; 3] {
    let (s, c) = heading.sin_cos();
    [v * c, v * s, v * curvature]
}

/// Advances the plant by `dt`.
///
/// Returns the new state together with the input actually applied after
/// saturation; the caller keeps the applied steer for the next rate limit.
pub fn step(
    state: &VehicleState,
    input: ControlInput,
    prev_steer: f64,
    params: &VehicleParams,
    dt: f64,
) -> Result<(VehicleState, ControlInput)> {
    if !(dt > 0.0 && dt <= MAX_STEP_DT) {
        return Err(Error::InvalidInput(format!(
            "step dt must be in (0, {MAX_STEP_DT}], got {dt}"
        )));
    }
    if !(input.accel.is_finite() && input.steer.is_finite() && prev_steer.is_finite()) {
        return Err(Error::InvalidInput(format!("non-finite control input {input:?}")));
    }
    if !state.is_finite() {
        return Err(Error::InvalidInput(format!("non-finite vehicle state {state:?}")));
    }
    let applied = params.saturate(input, prev_steer, dt);

    // No reverse: if braking would cross zero speed within the step, brake
    // just hard enough to stop at its end. Speed is then affine in time.
    let mut accel = applied.accel;
    if state.v + accel * dt < 0.0 {
        accel = -state.v / dt;
    }
    let curvature = applied.steer.tan() / params.wheelbase;
    let speed_at = |tau: f64| state.v + accel * tau;

    let h = dt;
    let k1 = pose_rate(state.heading, speed_at(0.0), curvature);
    let k2 = pose_rate(state.heading + 0.5 * h * k1[2], speed_at(0.5 * h), curvature);
    let k3 = pose_rate(state.heading + 0.5 * h * k2[2], speed_at(0.5 * h), curvature);
    let k4 = pose_rate(state.heading + h * k3[2], speed_at(h), curvature);
    let incr = |i: usize| h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);

    let next = VehicleState {
        x: state.x + incr(0),
        y: state.y + incr(1),
        heading: wrap_angle(state.heading + incr(2)),
        v: speed_at(h).max(0.0),
    };
    Ok((next, applied))
}
