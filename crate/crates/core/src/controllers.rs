//! Decoupled control stack: LQR steering on the lateral error state and a
//! cascaded station -> speed -> acceleration PID pair, with the lead/lag
//! compensation added on top of the PID output.

use std::collections::HashMap;

use nalgebra::{DMatrix, Matrix1, Matrix1x4, Matrix4, SMatrix, Vector4};
use serde::{Deserialize, Serialize};

use crate::compensation::{compensation_accel, CompensationConfig};
use crate::error::{Error, Result};
use crate::geometry::{curvature_at, wrap_angle, Trajectory, TrajectoryPoint, Vec2};
use crate::leadlag::{offset_frame, OffsetFrame};
use crate::vehicle::{ControlInput, VehicleParams, VehicleState};

/// Number of trailing residuals kept for non-convergence diagnostics.
const RESIDUAL_HISTORY: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct DareSolution<const N: usize, const M: usize> {
    pub p: SMatrix<f64, N, N>,
    pub k: SMatrix<f64, M, N>,
    pub iterations: usize,
    pub residual: f64,
}

fn gain_denominator_inverse<const N: usize, const M: usize>(
    b: &SMatrix<f64, N, M>,
    r: &SMatrix<f64, M, M>,
    p: &SMatrix<f64, N, N>,
) -> Result<SMatrix<f64, M, M>> {
    (r + b.transpose() * p * b)
        .try_inverse()
        .ok_or_else(|| Error::InvalidInput("R + BᵀPB is singular".into()))
}

fn riccati_map<const N: usize, const M: usize>(
    a: &SMatrix<f64, N, N>,
    b: &SMatrix<f64, N, M>,
    q: &SMatrix<f64, N, N>,
    r: &SMatrix<f64, M, M>,
    p: &SMatrix<f64, N, N>,
) -> Result<SMatrix<f64, N, N>> {
    let at = a.transpose();
    let pa = p * a;
    let bt_pa = b.transpose() * pa;
    let den = gain_denominator_inverse(b, r, p)?;
    Ok(at * pa - at * p * b * den * bt_pa + q)
}

/// Max-norm of `F(P) - P` where `F` is the Riccati map.
pub fn dare_residual<const N: usize, const M: usize>(
    a: &SMatrix<f64, N, N>,
    b: &SMatrix<f64, N, M>,
    q: &SMatrix<f64, N, N>,
    r: &SMatrix<f64, M, M>,
    p: &SMatrix<f64, N, N>,
) -> Result<f64> {
    Ok((riccati_map(a, b, q, r, p)? - p).amax())
}

/// Solves the discrete algebraic Riccati equation by fixed-point iteration
/// of the Riccati map starting from `P₀ = Q`, and returns the steady-state
/// feedback `K = (R + BᵀPB)⁻¹BᵀPA`.
pub fn solve_dare<const N: usize, const M: usize>(
    a: &SMatrix<f64, N, N>,
    b: &SMatrix<f64, N, M>,
    q: &SMatrix<f64, N, N>,
    r: &SMatrix<f64, M, M>,
    tol: f64,
    max_iter: usize,
) -> Result<DareSolution<N, M>> {
    solve_dare_from(a, b, q, r, *q, tol, max_iter)
}

/// [`solve_dare`] with an explicit starting point, e.g. the solution for a
/// nearby model.
pub fn solve_dare_from<const N: usize, const M: usize>(
    a: &SMatrix<f64, N, N>,
    b: &SMatrix<f64, N, M>,
    q: &SMatrix<f64, N, N>,
    r: &SMatrix<f64, M, M>,
    p0: SMatrix<f64, N, N>,
    tol: f64,
    max_iter: usize,
) -> Result<DareSolution<N, M>> {
    let mut p = p0;
    let mut history = Vec::with_capacity(RESIDUAL_HISTORY);
    for iteration in 0..=max_iter {
        let next = riccati_map(a, b, q, r, &p)?;
        let residual = (next - p).amax();
        if !residual.is_finite() {
            history.push(residual);
            return Err(Error::DareNoConvergence {
                iterations: iteration,
                residuals: history,
            });
        }
        if residual <= tol {
            let k = gain_denominator_inverse(b, r, &p)? * b.transpose() * p * a;
            return Ok(DareSolution {
                p,
                k,
                iterations: iteration,
                residual,
            });
        }
        if history.len() == RESIDUAL_HISTORY {
            history.remove(0);
        }
        history.push(residual);
        p = next;
    }
    Err(Error::DareNoConvergence {
        iterations: max_iter,
        residuals: history,
    })
}

/// Largest eigenvalue modulus.
pub fn spectral_radius<const N: usize>(m: &SMatrix<f64, N, N>) -> f64 {
    DMatrix::from_column_slice(N, N, m.as_slice())
        .complex_eigenvalues()
        .iter()
        .fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Lateral error state `[e, ė, θe, θ̇e]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LateralErrorState {
    pub e: f64,
    pub e_dot: f64,
    pub theta_e: f64,
    pub theta_e_dot: f64,
}

impl LateralErrorState {
    pub fn as_vector(&self) -> Vector4<f64> {
        Vector4::new(self.e, self.e_dot, self.theta_e, self.theta_e_dot)
    }
}

/// Discrete kinematic error dynamics linearized at speed `v`:
///
/// ```text
/// e'      = e + dt·ė
/// ė'      = v·θe
/// θe'     = θe + dt·θ̇e
/// θ̇e'     = (v / L)·δ
/// ```
pub fn lateral_model(v: f64, dt: f64, wheelbase: f64) -> (Matrix4<f64>, Vector4<f64>) {
    #[rustfmt::skip]
    let a = Matrix4::new(
        1.0, dt,  0.0, 0.0,
        0.0, 0.0, v,   0.0,
        0.0, 0.0, 1.0, dt,
        0.0, 0.0, 0.0, 0.0,
    );
    let b = Vector4::new(0.0, 0.0, 0.0, v / wheelbase);
    (a, b)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LqrConfig {
    pub q_diag: [f64; 4],
    pub r: f64,
    pub dare_tol: f64,
    pub dare_max_iter: usize,
    /// Linearization speed floor; the model has no control authority at rest.
    pub min_speed: f64,
    /// Linearization speeds are rounded to this step so gains can be reused.
    pub speed_quantum: f64,
    /// Adds the steady-state steer `atan(L·κ)` for the target's curvature.
    pub curvature_feedforward: bool,
}

impl Default for LqrConfig {
    fn default() -> Self {
        Self {
            q_diag: [1.0, 0.1, 1.0, 0.1],
            r: 10.0,
            dare_tol: 1e-9,
            dare_max_iter: 10_000,
            min_speed: 1.0,
            speed_quantum: 0.01,
            curvature_feedforward: true,
        }
    }
}

impl LqrConfig {
    pub fn validate(&self) -> Result<()> {
        if self.q_diag.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
            return Err(Error::config("lqr.q_diag", "all weights must be > 0"));
        }
        if !(self.r > 0.0 && self.r.is_finite()) {
            return Err(Error::config("lqr.r", "must be > 0"));
        }
        if !(self.dare_tol > 0.0) {
            return Err(Error::config("lqr.dare_tol", "must be > 0"));
        }
        if self.dare_max_iter == 0 {
            return Err(Error::config("lqr.dare_max_iter", "must be > 0"));
        }
        if !(self.min_speed > 0.0) {
            return Err(Error::config("lqr.min_speed", "must be > 0"));
        }
        if !(self.speed_quantum > 0.0) {
            return Err(Error::config("lqr.speed_quantum", "must be > 0"));
        }
        Ok(())
    }

    /// Solves the lateral LQR problem at speed `v`.
    pub fn q(&self) -> Matrix4<f64> {
        Matrix4::from_diagonal(&Vector4::from(self.q_diag))
    }

    pub fn solve(&self, v: f64, dt: f64, wheelbase: f64) -> Result<(DareSolution<4, 1>, Matrix1x4<f64>)> {
        self.solve_from(v, dt, wheelbase, None)
    }

    /// Like [`LqrConfig::solve`], iterating from `warm` instead of `Q`.
    pub fn solve_from(
        &self,
        v: f64,
        dt: f64,
        wheelbase: f64,
        warm: Option<&Matrix4<f64>>,
    ) -> Result<(DareSolution<4, 1>, Matrix1x4<f64>)> {
        let (a, b) = lateral_model(v, dt, wheelbase);
        let q = self.q();
        let r = Matrix1::new(self.r);
        let sol = solve_dare_from(&a, &b, &q, &r, warm.copied().unwrap_or(q), self.dare_tol, self.dare_max_iter)?;
        let k = sol.k;
        Ok((sol, k))
    }
}

/// `steer = -K·x`, saturated to `±max_steer`.
pub fn lateral_control(err: &LateralErrorState, k: &Matrix1x4<f64>, max_steer: f64) -> f64 {
    let u = -(k * err.as_vector())[0];
    u.clamp(-max_steer, max_steer)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PidGains {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
    /// Bound on the accumulated integral `Σ e·dt`.
    pub integral_limit: f64,
}

impl PidGains {
    fn validate(&self, key: &str) -> Result<()> {
        for (name, g) in [("kp", self.kp), ("ki", self.ki), ("kd", self.kd)] {
            if !(g >= 0.0 && g.is_finite()) {
                return Err(Error::config(format!("{key}.{name}"), "must be >= 0"));
            }
        }
        if !(self.integral_limit > 0.0) {
            return Err(Error::config(format!("{key}.integral_limit"), "must be > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PidState {
    pub integral: f64,
    pub prev_error: Option<f64>,
}

impl PidState {
    /// One discrete PID update with a clamped integrator; the first call has
    /// no derivative term.
    pub fn update(&mut self, gains: &PidGains, error: f64, dt: f64) -> f64 {
        self.integral = (self.integral + error * dt).clamp(-gains.integral_limit, gains.integral_limit);
        let derivative = self.prev_error.map_or(0.0, |prev| (error - prev) / dt);
        self.prev_error = Some(error);
        gains.kp * error + gains.ki * self.integral + gains.kd * derivative
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DualPidConfig {
    /// Station error (m) -> speed correction (m/s).
    pub outer: PidGains,
    /// Speed error (m/s) -> acceleration (m/s²).
    pub inner: PidGains,
}

impl Default for DualPidConfig {
    fn default() -> Self {
        Self {
            outer: PidGains {
                kp: 0.8,
                ki: 0.0,
                kd: 0.1,
                integral_limit: 5.0,
            },
            inner: PidGains {
                kp: 1.2,
                ki: 0.1,
                kd: 0.0,
                integral_limit: 20.0,
            },
        }
    }
}

impl DualPidConfig {
    pub fn validate(&self) -> Result<()> {
        self.outer.validate("pid.outer")?;
        self.inner.validate("pid.inner")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DualPidState {
    pub outer: PidState,
    pub inner: PidState,
}

/// Cascaded longitudinal control. `station_err` is positive when the vehicle
/// is behind its scheduled position.
pub fn longitudinal_control(
    cfg: &DualPidConfig,
    station_err: f64,
    v_target: f64,
    v_actual: f64,
    dt: f64,
    state: &mut DualPidState,
) -> f64 {
    let dv = state.outer.update(&cfg.outer, station_err, dt);
    state.inner.update(&cfg.inner, v_target + dv - v_actual, dt)
}

/// Target trajectory with its per-sample curvature precomputed.
#[derive(Debug, Clone)]
pub struct Reference {
    trajectory: Trajectory,
    curvature: Vec<f64>,
}

impl Reference {
    pub fn new(trajectory: Trajectory) -> Self {
        let positions: Vec<Vec2> = trajectory.points().iter().map(TrajectoryPoint::position).collect();
        // Undefined curvature (repeated positions while stopped) counts as straight.
        let curvature = (0..positions.len())
            .map(|i| curvature_at(&positions, i).unwrap_or(0.0))
            .collect();
        Self { trajectory, curvature }
    }

    pub fn trajectory(&self) -> &Trajectory {
        &self.trajectory
    }

    pub fn curvature_near(&self, t: f64) -> f64 {
        self.curvature[self.trajectory.nearest_index(t)]
    }
}

/// Mutable controller memory, owned by one simulation loop.
#[derive(Debug, Clone, Default)]
pub struct ControllerState {
    pub pid: DualPidState,
    prev_lateral: Option<(f64, f64)>,
    gain_cache: HashMap<i64, Matrix1x4<f64>>,
    /// Latest Riccati solution, used to warm-start the next solve.
    last_p: Option<Matrix4<f64>>,
}

/// Everything computed during one control tick.
#[derive(Debug, Clone, Copy)]
pub struct TickOutput {
    pub command: ControlInput,
    pub frame: OffsetFrame,
    pub lateral: LateralErrorState,
    pub pid_accel: f64,
    pub compensation_accel: f64,
    pub steer_feedforward: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ControllerConfigs {
    pub vehicle: VehicleParams,
    pub lqr: LqrConfig,
    pub pid: DualPidConfig,
    pub compensation: CompensationConfig,
}

impl ControllerState {
    /// Number of distinct linearization speeds solved so far.
    pub fn cached_gains(&self) -> usize {
        self.gain_cache.len()
    }

    fn gain_at(&mut self, cfg: &ControllerConfigs, v: f64, dt: f64) -> Result<Matrix1x4<f64>> {
        let quantum = cfg.lqr.speed_quantum;
        let key = (v.max(cfg.lqr.min_speed) / quantum).round() as i64;
        if let Some(k) = self.gain_cache.get(&key) {
            return Ok(*k);
        }
        let (sol, k) = cfg
            .lqr
            .solve_from(key as f64 * quantum, dt, cfg.vehicle.wheelbase, self.last_p.as_ref())?;
        self.last_p = Some(sol.p);
        self.gain_cache.insert(key, k);
        Ok(k)
    }
}

/// One tick of the full stack: lead/lag frame, LQR steer, cascaded PID plus
/// compensation for acceleration. Plant saturation is applied by the vehicle
/// model, not here.
pub fn control_tick(
    reference: &Reference,
    state: &VehicleState,
    t: f64,
    dt: f64,
    cfg: &ControllerConfigs,
    memory: &mut ControllerState,
) -> Result<TickOutput> {
    let frame = offset_frame(reference.trajectory(), Vec2::new(state.x, state.y), t)?;

    let e = frame.dq;
    let theta_e = wrap_angle(state.heading - frame.target.heading);
    let (e_dot, theta_e_dot) = match memory.prev_lateral {
        Some((pe, pth)) => ((e - pe) / dt, wrap_angle(theta_e - pth) / dt),
        None => (0.0, 0.0),
    };
    memory.prev_lateral = Some((e, theta_e));
    let lateral = LateralErrorState {
        e,
        e_dot,
        theta_e,
        theta_e_dot,
    };

    let k = memory.gain_at(cfg, state.v, dt)?;
    let steer_feedforward = if cfg.lqr.curvature_feedforward {
        (cfg.vehicle.wheelbase * reference.curvature_near(t)).atan()
    } else {
        0.0
    };
    let steer = (lateral_control(&lateral, &k, cfg.vehicle.max_steer) + steer_feedforward)
        .clamp(-cfg.vehicle.max_steer, cfg.vehicle.max_steer);

    let pid_accel = longitudinal_control(&cfg.pid, -frame.dp, frame.target.v, state.v, dt, &mut memory.pid);
    let compensation_accel = if cfg.compensation.enabled {
        compensation_accel(frame.dp, &cfg.compensation)?
    } else {
        0.0
    };

    Ok(TickOutput {
        command: ControlInput {
            accel: pid_accel + compensation_accel,
            steer,
        },
        frame,
        lateral,
        pid_accel,
        compensation_accel,
        steer_feedforward,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(v: f64) -> Matrix1<f64> {
        Matrix1::new(v)
    }

    #[test]
    fn scalar_dare_golden_ratio() {
        let sol = solve_dare(&scalar(1.0), &scalar(1.0), &scalar(1.0), &scalar(1.0), 1e-12, 1000).unwrap();
        // P² - P - 1 = 0
        let golden = (1.0 + 5.0_f64.sqrt()) / 2.0;
        assert!((sol.p[(0, 0)] - golden).abs() < 1e-10);
        assert!((sol.k[(0, 0)] - golden / (1.0 + golden)).abs() < 1e-10);
    }

    #[test]
    fn dare_without_control_is_lyapunov() {
        let a = scalar(0.5);
        let sol = solve_dare(&a, &scalar(0.0), &scalar(2.0), &scalar(1.0), 1e-12, 1000).unwrap();
        // P = Q + a²P  =>  P = 2 / 0.75
        assert!((sol.p[(0, 0)] - 2.0 / 0.75).abs() < 1e-10);
        assert_eq!(sol.k[(0, 0)], 0.0);
    }

    #[test]
    fn dare_zero_cost() {
        let a = nalgebra::Matrix2::from_diagonal_element(0.9);
        let b = nalgebra::Vector2::new(0.0, 1.0);
        let sol = solve_dare(&a, &b, &nalgebra::Matrix2::zeros(), &scalar(1.0), 1e-12, 10).unwrap();
        assert_eq!(sol.p.amax(), 0.0);
        assert_eq!(sol.k.amax(), 0.0);
    }

    #[test]
    fn dare_reports_non_convergence() {
        // Unstable and uncontrollable: P grows without bound.
        let err = solve_dare(&scalar(2.0), &scalar(0.0), &scalar(1.0), &scalar(1.0), 1e-9, 50).unwrap_err();
        match err {
            Error::DareNoConvergence { iterations, residuals } => {
                assert_eq!(iterations, 50);
                assert!(!residuals.is_empty());
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn lateral_gain_stabilizes_and_satisfies_riccati() {
        let cfg = LqrConfig::default();
        for v in [5.0, 15.0, 30.0] {
            let (sol, k) = cfg.solve(v, 0.01, 2.7).unwrap();
            let (a, b) = lateral_model(v, 0.01, 2.7);
            assert!(dare_residual(&a, &b, &cfg.q(), &scalar(cfg.r), &sol.p).unwrap() <= 1e-9);
            assert!(spectral_radius(&(a - b * k)) < 1.0);
        }
    }

    #[test]
    fn lateral_control_signs() {
        let zero = LateralErrorState::default();
        let k = Matrix1x4::new(0.5, 0.0, 0.0, 0.0);
        assert_eq!(lateral_control(&zero, &k, 0.6), 0.0);
        let left = LateralErrorState { e: 1.0, ..zero };
        assert_eq!(lateral_control(&left, &k, 0.6), -0.5);
        let far = LateralErrorState { e: 10.0, ..zero };
        assert_eq!(lateral_control(&far, &k, 0.6), -0.6);
    }

    #[test]
    fn lateral_control_matches_matrix_product() {
        let (_, k) = LqrConfig::default().solve(15.0, 0.01, 2.7).unwrap();
        let err = LateralErrorState {
            e: 0.12,
            e_dot: -0.03,
            theta_e: 0.004,
            theta_e_dot: 0.01,
        };
        // Independent evaluation: explicit row-times-column sum.
        let x = [err.e, err.e_dot, err.theta_e, err.theta_e_dot];
        let manual: f64 = -(0..4).map(|i| k[(0, i)] * x[i]).sum::<f64>();
        assert!((lateral_control(&err, &k, 10.0) - manual).abs() < 1e-15);
    }

    #[test]
    fn warm_start_agrees_with_cold() {
        let cfg = LqrConfig::default();
        let (near, _) = cfg.solve(14.9, 0.01, 2.7).unwrap();
        let (cold, k_cold) = cfg.solve(15.0, 0.01, 2.7).unwrap();
        let (warm, k_warm) = cfg.solve_from(15.0, 0.01, 2.7, Some(&near.p)).unwrap();
        assert!(warm.iterations < cold.iterations, "{} vs {}", warm.iterations, cold.iterations);
        assert!((k_warm - k_cold).amax() < 1e-6);
    }

    #[test]
    fn longitudinal_equilibrium_and_proportional() {
        let cfg = DualPidConfig::default();
        let mut st = DualPidState::default();
        assert_eq!(longitudinal_control(&cfg, 0.0, 10.0, 10.0, 0.01, &mut st), 0.0);

        let p_only = DualPidConfig {
            outer: PidGains { kp: 0.8, ki: 0.0, kd: 0.0, integral_limit: 1.0 },
            inner: PidGains { kp: 1.2, ki: 0.0, kd: 0.0, integral_limit: 1.0 },
        };
        let mut st = DualPidState::default();
        let a = longitudinal_control(&p_only, 2.0, 10.0, 10.0, 0.01, &mut st);
        assert!((a - 1.92).abs() < 1e-12);
        let mut st = DualPidState::default();
        let a2 = longitudinal_control(&p_only, 4.0, 10.0, 10.0, 0.01, &mut st);
        assert!((a2 - 2.0 * a).abs() < 1e-12);
    }

    #[test]
    fn integrator_ramps_then_clamps() {
        let gains = PidGains { kp: 0.0, ki: 1.0, kd: 0.0, integral_limit: 0.025 };
        let mut st = PidState::default();
        // Σ e·dt with e = 1, dt = 0.01: 0.01, 0.02, then 0.03 clamped to 0.025.
        let outputs: Vec<f64> = (0..3).map(|_| st.update(&gains, 1.0, 0.01)).collect();
        assert!((outputs[0] - 0.01).abs() < 1e-15);
        assert!((outputs[1] - 0.02).abs() < 1e-15);
        assert_eq!(outputs[2], 0.025);
        assert_eq!(st.integral, 0.025);
    }

    #[test]
    fn derivative_starts_at_zero() {
        let gains = PidGains { kp: 0.0, ki: 0.0, kd: 1.0, integral_limit: 1.0 };
        let mut st = PidState::default();
        assert_eq!(st.update(&gains, 5.0, 0.1), 0.0);
        assert!((st.update(&gains, 6.0, 0.1) - 10.0).abs() < 1e-12);
    }

    fn straight_reference() -> Reference {
        let pts = (0..=100)
            .map(|i| {
                let t = i as f64 * 0.1;
                TrajectoryPoint::new(t, 10.0 * t, 0.0, 10.0, 0.0)
            })
            .collect();
        Reference::new(Trajectory::new(pts).unwrap())
    }

    #[test]
    fn control_tick_equilibrium() {
        let reference = straight_reference();
        let cfg = ControllerConfigs::default();
        let mut mem = ControllerState::default();
        let state = VehicleState::new(50.0, 0.0, 0.0, 10.0);
        let out = control_tick(&reference, &state, 5.0, 0.01, &cfg, &mut mem).unwrap();
        assert!(out.command.accel.abs() <= 1e-9);
        assert!(out.command.steer.abs() <= 1e-9);
    }

    #[test]
    fn control_tick_adds_compensation() {
        let reference = straight_reference();
        let cfg = ControllerConfigs::default();
        let mut mem = ControllerState::default();
        let state = VehicleState::new(51.0, 0.0, 0.0, 10.0);
        let out = control_tick(&reference, &state, 5.0, 0.01, &cfg, &mut mem).unwrap();
        assert!((out.frame.dp - 1.0).abs() < 1e-12);
        assert!((out.compensation_accel + 1.0).abs() < 1e-12);
        assert!((out.command.accel - (out.pid_accel - 1.0)).abs() < 1e-12);

        let disabled = ControllerConfigs {
            compensation: CompensationConfig { enabled: false, ..Default::default() },
            ..ControllerConfigs::default()
        };
        let mut mem = ControllerState::default();
        let out = control_tick(&reference, &state, 5.0, 0.01, &disabled, &mut mem).unwrap();
        assert_eq!(out.compensation_accel, 0.0);
    }
}
