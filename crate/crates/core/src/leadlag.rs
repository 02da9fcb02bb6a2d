//! Same-instant lead/lag and left/right judgment.
//!
//! The displacement from the target point to the tracked point at one instant
//! is projected onto the target's forward tangent (longitudinal offset, `dp`)
//! and onto its left normal (lateral offset, `dq`). Positive `dp` means the
//! tracked point is ahead of schedule; positive `dq` means it is left of the
//! target.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::common_clock;
use crate::error::{Error, Result};
use crate::geometry::{normal_unit, Trajectory, TrajectoryPoint, UnitVec2, Vec2};

pub const DEFAULT_EPS: f64 = 0.01;
pub const DEFAULT_DT: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LongitudinalClass {
    Lead,
    Lag,
    OnPoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LateralClass {
    Left,
    Right,
    OnLine,
}

impl fmt::Display for LongitudinalClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LongitudinalClass::Lead => "lead",
            LongitudinalClass::Lag => "lag",
            LongitudinalClass::OnPoint => "on_point",
        })
    }
}

impl fmt::Display for LateralClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LateralClass::Left => "left",
            LateralClass::Right => "right",
            LateralClass::OnLine => "on_line",
        })
    }
}

impl FromStr for LongitudinalClass {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lead" => Ok(Self::Lead),
            "lag" => Ok(Self::Lag),
            "on_point" => Ok(Self::OnPoint),
            other => Err(Error::InvalidInput(format!("unknown longitudinal class `{other}`"))),
        }
    }
}

impl FromStr for LateralClass {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "left" => Ok(Self::Left),
            "right" => Ok(Self::Right),
            "on_line" => Ok(Self::OnLine),
            other => Err(Error::InvalidInput(format!("unknown lateral class `{other}`"))),
        }
    }
}

/// The target-anchored frame at one instant together with both projections.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OffsetFrame {
    pub target: TrajectoryPoint,
    /// Displacement target -> tracked.
    pub displacement: Vec2,
    pub tangent: UnitVec2,
    pub normal: UnitVec2,
    pub dp: f64,
    pub dq: f64,
}

/// Builds the judgment frame for `tracked` against `target` sampled at `t0`.
pub fn offset_frame(target: &Trajectory, tracked: Vec2, t0: f64) -> Result<OffsetFrame> {
    let target_pt = target.sample(t0)?;
    let tangent = target.tangent_unit(t0)?;
    let normal = normal_unit(tangent);
    let displacement = tracked - target_pt.position();
    Ok(OffsetFrame {
        target: target_pt,
        displacement,
        tangent,
        normal,
        dp: displacement.dot(tangent.as_vec()),
        dq: displacement.dot(normal.as_vec()),
    })
}

/// Signed along-track offset; positive = lead, negative = lag.
pub fn longitudinal_offset(target: &Trajectory, tracked_pt: &TrajectoryPoint, t0: f64) -> Result<f64> {
    Ok(offset_frame(target, tracked_pt.position(), t0)?.dp)
}

/// Signed cross-track offset; positive = left of the target, negative = right.
pub fn lateral_offset(target: &Trajectory, tracked_pt: &TrajectoryPoint, t0: f64) -> Result<f64> {
    Ok(offset_frame(target, tracked_pt.position(), t0)?.dq)
}

pub fn classify(dp: f64, dq: f64, eps: f64) -> (LongitudinalClass, LateralClass) {
    let lon = if dp.abs() <= eps {
        LongitudinalClass::OnPoint
    } else if dp > 0.0 {
        LongitudinalClass::Lead
    } else {
        LongitudinalClass::Lag
    };
    let lat = if dq.abs() <= eps {
        LateralClass::OnLine
    } else if dq > 0.0 {
        LateralClass::Left
    } else {
        LateralClass::Right
    };
    (lon, lat)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OffsetSample {
    pub t: f64,
    pub dp: f64,
    pub dq: f64,
    pub lon_class: LongitudinalClass,
    pub lat_class: LateralClass,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OffsetSeries {
    pub samples: Vec<OffsetSample>,
    pub eps: f64,
}

impl OffsetSeries {
    pub fn max_abs_dp(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, s| m.max(s.dp.abs()))
    }
}

/// Evaluates the judgment on the common clock `t_start, t_start + dt, ...`
/// spanning the overlap of both time domains.
pub fn offset_series(target: &Trajectory, tracked: &Trajectory, dt: f64, eps: f64) -> Result<OffsetSeries> {
    if !(eps >= 0.0) {
        return Err(Error::InvalidInput(format!("eps must be >= 0, got {eps}")));
    }
    let clock = common_clock::CommonClock::overlap(target, tracked, dt)?;
    let samples = clock
        .ticks()
        .map(|t| {
            let frame = offset_frame(target, tracked.sample(t)?.position(), t)?;
            let (lon_class, lat_class) = classify(frame.dp, frame.dq, eps);
            Ok(OffsetSample {
                t,
                dp: frame.dp,
                dq: frame.dq,
                lon_class,
                lat_class,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(OffsetSeries { samples, eps })
}
