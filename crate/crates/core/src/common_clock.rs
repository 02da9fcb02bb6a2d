use crate::error::{Error, Result};
use crate::geometry::Trajectory;

/// Absorbs float noise when counting ticks that fit in an interval.
const TICK_SLACK: f64 = 1e-9;

/// Evenly spaced instants `start + k·dt` for `k = 0..count`, never past `end`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CommonClock {
    pub start: f64,
    pub end: f64,
    pub dt: f64,
    pub count: usize,
}

impl CommonClock {
    /// Clock spanning `[start, end]` inclusive of `start`; the last tick is
    /// the largest `start + k·dt` not exceeding `end`.
    pub fn spanning(start: f64, end: f64, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidInput(format!("dt must be positive, got {dt}")));
        }
        if !(end >= start) {
            return Err(Error::InvalidInput(format!("empty interval [{start}, {end}]")));
        }
        let count = ((end - start) / dt + TICK_SLACK).floor() as usize + 1;
        Ok(Self { start, end, dt, count })
    }

    /// Clock over the overlapping time domain of two trajectories.
    pub fn overlap(target: &Trajectory, tracked: &Trajectory, dt: f64) -> Result<Self> {
        let start = target.start_time().max(tracked.start_time());
        let end = target.end_time().min(tracked.end_time());
        if start > end {
            return Err(Error::NoOverlap {
                target_start: target.start_time(),
                target_end: target.end_time(),
                tracked_start: tracked.start_time(),
                tracked_end: tracked.end_time(),
            });
        }
        let clock = Self::spanning(start, end, dt)?;
        Ok(clock)
    }

    /// The slack in `spanning` can admit a last tick a few ulps past `end`;
    /// it is pinned to `end` so sampling stays in domain.
    pub fn tick(&self, k: usize) -> f64 {
        (self.start + k as f64 * self.dt).min(self.end)
    }

    pub fn ticks(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.count).map(move |k| self.tick(k))
    }

    /// Number of ticks that fall within `duration` seconds of the first.
    pub fn ticks_within(&self, duration: f64) -> usize {
        (((duration / self.dt) + TICK_SLACK).floor() as usize + 1).min(self.count)
    }
}
