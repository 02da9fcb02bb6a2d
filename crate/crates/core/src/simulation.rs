//! Closed-loop run: control tick, plant step, repeat on a fixed clock.

use std::io::Write;

use serde::Serialize;

use crate::common_clock::CommonClock;
use crate::config::SimulationConfig;
use crate::controllers::{control_tick, ControllerConfigs, ControllerState, Reference};
use crate::error::{Error, Result};
use crate::geometry::{Trajectory, TrajectoryPoint};
use crate::vehicle::{step, VehicleState};

/// Per-tick controller trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TickRecord {
    pub t: f64,
    pub dp: f64,
    pub dq: f64,
    pub pid_accel: f64,
    pub compensation_accel: f64,
    /// Applied after saturation.
    pub accel: f64,
    pub steer: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationStats {
    pub ticks: usize,
    pub duration: f64,
    pub max_abs_dp: f64,
    pub max_abs_dq: f64,
    pub compensation_ticks: usize,
    pub distinct_gains: usize,
}

#[derive(Debug, Clone)]
pub struct SimulationOutput {
    pub tracked: Trajectory,
    pub trace: Vec<TickRecord>,
    pub stats: SimulationStats,
}

pub const TRACE_HEADER: [&str; 7] = ["t", "dp", "dq", "pid_accel", "compensation_accel", "accel", "steer"];

pub fn write_trace(w: &mut dyn Write, trace: &[TickRecord]) -> std::io::Result<()> {
    writeln!(w, "{}", TRACE_HEADER.join(","))?;
    for r in trace {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            r.t, r.dp, r.dq, r.pid_accel, r.compensation_accel, r.accel, r.steer
        )?;
    }
    Ok(())
}

/// Initial vehicle state: the first target point shifted by the configured
/// offsets, with the target's heading.
pub fn initial_state(target: &Trajectory, sim: &SimulationConfig) -> VehicleState {
    let p = target.points()[0];
    let (s, c) = p.heading.sin_cos();
    VehicleState::new(
        p.x + sim.start_dp * c - sim.start_dq * s,
        p.y + sim.start_dp * s + sim.start_dq * c,
        p.heading,
        sim.start_speed.unwrap_or(p.v),
    )
}

/// Runs from the target's first timestamp to its last common-clock tick (or
/// the duration cap). Fails with [`Error::Divergence`] once the lateral
/// offset exceeds the limit.
pub fn simulate(target: &Trajectory, sim: &SimulationConfig, cfg: &ControllerConfigs) -> Result<SimulationOutput> {
    let start = target.start_time();
    let end = match sim.max_duration {
        Some(d) => target.end_time().min(start + d),
        None => target.end_time(),
    };
    let clock = CommonClock::spanning(start, end, sim.dt)?;
    let reference = Reference::new(target.clone());
    let mut memory = ControllerState::default();

    let mut state = initial_state(target, sim);
    let mut prev_steer = 0.0;
    let mut points = Vec::with_capacity(clock.count);
    let mut trace = Vec::with_capacity(clock.count);
    points.push(TrajectoryPoint::new(start, state.x, state.y, state.v, state.heading));

    for k in 0..clock.count - 1 {
        let t = clock.tick(k);
        let out = control_tick(&reference, &state, t, sim.dt, cfg, &mut memory)?;
        let dq = out.frame.dq;
        if !(dq.abs() <= sim.divergence_limit) || !out.frame.dp.is_finite() {
            return Err(Error::Divergence {
                t,
                reason: format!(
                    "lateral offset {dq:.3} m exceeds {} m; dp = {:.3} m, state = ({:.3}, {:.3}, heading {:.4}, v {:.3}), command = ({:.3} m/s², {:.4} rad)",
                    sim.divergence_limit, out.frame.dp, state.x, state.y, state.heading, state.v, out.command.accel, out.command.steer
                ),
            });
        }
        let (next, applied) = step(&state, out.command, prev_steer, &cfg.vehicle, sim.dt)?;
        trace.push(TickRecord {
            t,
            dp: out.frame.dp,
            dq,
            pid_accel: out.pid_accel,
            compensation_accel: out.compensation_accel,
            accel: applied.accel,
            steer: applied.steer,
        });
        prev_steer = applied.steer;
        state = next;
        points.push(TrajectoryPoint::new(clock.tick(k + 1), state.x, state.y, state.v, state.heading));
    }

    let tracked = Trajectory::new(points)?;
    let stats = SimulationStats {
        ticks: trace.len(),
        duration: clock.tick(clock.count - 1) - start,
        max_abs_dp: trace.iter().fold(0.0, |m, r| m.max(r.dp.abs())),
        max_abs_dq: trace.iter().fold(0.0, |m, r| m.max(r.dq.abs())),
        compensation_ticks: trace.iter().filter(|r| r.compensation_accel != 0.0).count(),
        distinct_gains: memory.cached_gains(),
    };
    Ok(SimulationOutput { tracked, trace, stats })
}
