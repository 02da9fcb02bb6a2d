//! Planar trajectory representation and the local frame used by the lead/lag
//! judgment: forward unit tangent, left normal, and signed curvature.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Below this speed (m/s) the finite-difference tangent is considered
/// degenerate and the stored heading channel is used instead.
pub const TANGENT_SPEED_FLOOR: f64 = 0.01;

/// Wraps an angle into `(-π, π]`.
pub fn wrap_angle(angle: f64) -> f64 {
    let wrapped = (angle + PI).rem_euclid(2.0 * PI) - PI;
    if wrapped <= -PI {
        wrapped + 2.0 * PI
    } else {
        wrapped
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 3D cross product.
    pub fn cross(self, other: Vec2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn lerp(self, other: Vec2, w: f64) -> Vec2 {
        Vec2::new(
            self.x + (other.x - self.x) * w,
            self.y + (other.y - self.y) * w,
        )
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, rhs: f64) -> Vec2 {
        Vec2::new(self.x * rhs, self.y * rhs)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// A direction in the plane with unit Euclidean norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UnitVec2 {
    ux: f64,
    uy: f64,
}

impl UnitVec2 {
    /// Normalizes `v`. Returns `None` for zero-length or non-finite input.
    pub fn try_from_vec(v: Vec2) -> Option<Self> {
        let n = v.norm();
        if !(n.is_finite() && n > 0.0) {
            return None;
        }
        Some(Self {
            ux: v.x / n,
            uy: v.y / n,
        })
    }

    pub fn from_angle(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self { ux: c, uy: s }
    }

    pub fn ux(self) -> f64 {
        self.ux
    }

    pub fn uy(self) -> f64 {
        self.uy
    }

    pub fn as_vec(self) -> Vec2 {
        Vec2::new(self.ux, self.uy)
    }

    pub fn angle(self) -> f64 {
        self.uy.atan2(self.ux)
    }

    /// The left-pointing normal: a +90° counterclockwise rotation.
    pub fn normal(self) -> UnitVec2 {
        normal_unit(self)
    }
}

/// Rotates a unit vector by +90°: `(ux, uy) -> (-uy, ux)`.
pub fn normal_unit(u: UnitVec2) -> UnitVec2 {
    UnitVec2 {
        ux: -u.uy,
        uy: u.ux,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub v: f64,
    pub heading: f64,
}

impl TrajectoryPoint {
    pub fn new(t: f64, x: f64, y: f64, v: f64, heading: f64) -> Self {
        Self {
            t,
            x,
            y,
            v,
            heading: wrap_angle(heading),
        }
    }

    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    fn validate(&self, index: usize) -> Result<()> {
        let fields = [self.t, self.x, self.y, self.v, self.heading];
        if fields.iter().any(|f| !f.is_finite()) {
            return Err(Error::InvalidTrajectory(format!(
                "point {index} has a non-finite field"
            )));
        }
        if self.v < 0.0 {
            return Err(Error::InvalidTrajectory(format!(
                "point {index} has negative speed {}",
                self.v
            )));
        }
        Ok(())
    }
}

/// Time-ordered sequence of at least two samples with strictly increasing `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    points: Vec<TrajectoryPoint>,
}

impl Trajectory {
    pub fn new(mut points: Vec<TrajectoryPoint>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidTrajectory(format!(
                "need at least 2 points, got {}",
                points.len()
            )));
        }
        for (i, p) in points.iter_mut().enumerate() {
            p.validate(i)?;
            p.heading = wrap_angle(p.heading);
        }
        for (i, w) in points.windows(2).enumerate() {
            if w[1].t <= w[0].t {
                return Err(Error::InvalidTrajectory(format!(
                    "time not strictly increasing at index {} ({} -> {})",
                    i + 1,
                    w[0].t,
                    w[1].t
                )));
            }
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[TrajectoryPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn start_time(&self) -> f64 {
        self.points[0].t
    }

    pub fn end_time(&self) -> f64 {
        self.points[self.points.len() - 1].t
    }

    pub fn into_points(self) -> Vec<TrajectoryPoint> {
        self.points
    }

    fn check_domain(&self, t: f64) -> Result<()> {
        if !(t >= self.start_time() && t <= self.end_time()) {
            return Err(Error::OutOfRange {
                t,
                start: self.start_time(),
                end: self.end_time(),
            });
        }
        Ok(())
    }

    /// Locates `t`: returns `(i, w)` with `t = t_i + w (t_{i+1} - t_i)` and
    /// `w ∈ [0, 1)`, except at the final sample where `i = n - 1, w = 0`.
    fn locate(&self, t: f64) -> (usize, f64) {
        let n = self.points.len();
        let upper = self.points.partition_point(|p| p.t <= t);
        if upper == 0 {
            return (0, 0.0);
        }
        let i = upper - 1;
        if i >= n - 1 {
            return (n - 1, 0.0);
        }
        let (a, b) = (&self.points[i], &self.points[i + 1]);
        (i, (t - a.t) / (b.t - a.t))
    }

    /// Index of the stored sample nearest in time to `t` (clamped to the domain).
    pub fn nearest_index(&self, t: f64) -> usize {
        let (i, w) = self.locate(t);
        if w > 0.5 {
            i + 1
        } else {
            i
        }
    }

    /// Linear interpolation of position and speed, shortest-arc interpolation
    /// of heading. Stored timestamps return the stored sample unchanged.
    pub fn sample(&self, t: f64) -> Result<TrajectoryPoint> {
        self.check_domain(t)?;
        let (i, w) = self.locate(t);
        let a = self.points[i];
        if w == 0.0 {
            return Ok(a);
        }
        let b = self.points[i + 1];
        let dh = wrap_angle(b.heading - a.heading);
        Ok(TrajectoryPoint {
            t,
            x: a.x + (b.x - a.x) * w,
            y: a.y + (b.y - a.y) * w,
            v: a.v + (b.v - a.v) * w,
            heading: wrap_angle(a.heading + dh * w),
        })
    }

    /// Finite-difference velocity vector at stored sample `i`: central in the
    /// interior, one-sided at both ends.
    fn knot_velocity(&self, i: usize) -> Vec2 {
        let n = self.points.len();
        let (lo, hi) = if i == 0 {
            (0, 1)
        } else if i == n - 1 {
            (n - 2, n - 1)
        } else {
            (i - 1, i + 1)
        };
        let (a, b) = (&self.points[lo], &self.points[hi]);
        (b.position() - a.position()) * (1.0 / (b.t - a.t))
    }

    /// Forward unit tangent at `t0`.
    ///
    /// The velocity is estimated by finite differences at the bracketing
    /// samples and blended linearly in time, then normalized. When the
    /// estimated speed drops below [`TANGENT_SPEED_FLOOR`] the stored heading
    /// channel is used.
    pub fn tangent_unit(&self, t0: f64) -> Result<UnitVec2> {
        self.check_domain(t0)?;
        let (i, w) = self.locate(t0);
        let vel = if w == 0.0 {
            self.knot_velocity(i)
        } else {
            self.knot_velocity(i).lerp(self.knot_velocity(i + 1), w)
        };
        if vel.norm() >= TANGENT_SPEED_FLOOR {
            if let Some(u) = UnitVec2::try_from_vec(vel) {
                return Ok(u);
            }
        }
        let heading = self.sample(t0)?.heading;
        if heading.is_finite() {
            Ok(UnitVec2::from_angle(heading))
        } else {
            Err(Error::DegenerateTangent { t: t0 })
        }
    }

    /// Signed curvature at a stored sample (positive = left turn). Endpoints
    /// copy their interior neighbour.
    pub fn curvature_at(&self, index: usize) -> Result<f64> {
        let positions: Vec<Vec2> = self.points.iter().map(TrajectoryPoint::position).collect();
        curvature_at(&positions, index)
    }
}

/// Signed curvature of the circle through three points (positive when
/// `a -> b -> c` turns left). Collinear points give 0.
pub fn three_point_curvature(a: Vec2, b: Vec2, c: Vec2) -> Option<f64> {
    let ab = (b - a).norm();
    let bc = (c - b).norm();
    let ca = (a - c).norm();
    if ab == 0.0 || bc == 0.0 || ca == 0.0 {
        return None;
    }
    let cross = (b - a).cross(c - b);
    Some(2.0 * cross / (ab * bc * ca))
}

/// Curvature at `index` of a polyline using the circumscribed circle of the
/// sample and its two neighbours.
pub fn curvature_at(points: &[Vec2], index: usize) -> Result<f64> {
    let n = points.len();
    if index >= n {
        return Err(Error::InvalidInput(format!(
            "curvature index {index} out of bounds for {n} points"
        )));
    }
    if n < 3 {
        return Ok(0.0);
    }
    let centre = index.clamp(1, n - 2);
    three_point_curvature(points[centre - 1], points[centre], points[centre + 1])
        .ok_or(Error::DuplicatePoints { index: centre })
}

/// Curvature at every sample of a polyline.
pub fn curvature_profile(points: &[Vec2]) -> Result<Vec<f64>> {
    (0..points.len()).map(|i| curvature_at(points, i)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(n: usize, dir: f64, speed: f64) -> Trajectory {
        let (s, c) = dir.sin_cos();
        Trajectory::new(
            (0..n)
                .map(|i| {
                    let t = i as f64 * 0.1;
                    TrajectoryPoint::new(t, c * speed * t, s * speed * t, speed, dir)
                })
                .collect(),
        )
        .unwrap()
    }

    fn circle(radius: f64, ccw: bool, n: usize, spacing: f64) -> Vec<Vec2> {
        let dphi = spacing / radius * if ccw { 1.0 } else { -1.0 };
        (0..n)
            .map(|i| {
                let phi = i as f64 * dphi;
                Vec2::new(radius * phi.cos(), radius * phi.sin())
            })
            .collect()
    }

    #[test]
    fn wrap_angle_range() {
        assert_eq!(wrap_angle(PI), PI);
        assert_eq!(wrap_angle(-PI), PI);
        assert!((wrap_angle(3.0 * PI) - PI).abs() < 1e-12);
        assert!((wrap_angle(-6.2) - 0.083_185_307_179_586_2).abs() < 1e-12);
        assert_eq!(wrap_angle(0.25), 0.25);
    }

    #[test]
    fn sample_linear_midpoint_and_exact_hit() {
        let traj = Trajectory::new(vec![
            TrajectoryPoint::new(0.0, 0.0, 0.0, 10.0, 0.0),
            TrajectoryPoint::new(1.0, 10.0, 0.0, 10.0, 0.0),
        ])
        .unwrap();
        assert_eq!(traj.sample(0.5).unwrap().x, 5.0);
        assert_eq!(traj.sample(1.0).unwrap(), traj.points()[1]);
        assert_eq!(traj.sample(0.0).unwrap(), traj.points()[0]);
    }

    #[test]
    fn sample_heading_takes_shortest_arc() {
        let traj = Trajectory::new(vec![
            TrajectoryPoint::new(0.0, 0.0, 0.0, 1.0, 3.0),
            TrajectoryPoint::new(1.0, 1.0, 0.0, 1.0, -3.0),
        ])
        .unwrap();
        // Oracle: walk the unit circle from 3.0 rad by half of the shortest
        // signed arc (2π - 6).
        let arc = 2.0 * PI - 6.0;
        let expected = UnitVec2::from_angle(3.0 + 0.5 * arc);
        let h = traj.sample(0.5).unwrap().heading;
        assert!((h.cos() - expected.ux()).abs() < 1e-12);
        assert!((h.sin() - expected.uy()).abs() < 1e-12);
        assert!((h.abs() - PI).abs() < 1e-12);
    }

    #[test]
    fn sample_out_of_range_names_interval() {
        let traj = line(5, 0.0, 1.0);
        let err = traj.sample(2.0).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("[0, 0.4"), "{msg}");
        assert!(traj.sample(-0.01).is_err());
    }

    #[test]
    fn tangent_axis_and_diagonal() {
        let u = line(5, 0.0, 3.0).tangent_unit(0.15).unwrap();
        assert!((u.ux() - 1.0).abs() < 1e-15 && u.uy().abs() < 1e-15);
        let u = line(5, PI / 4.0, 3.0).tangent_unit(0.2).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((u.ux() - h).abs() < 1e-12 && (u.uy() - h).abs() < 1e-12);
    }

    #[test]
    fn tangent_on_circle_matches_analytic_derivative() {
        // Samples at 1 m spacing on R = 50 m, centred so that the query
        // point (50, 0) is an interior sample.
        let radius = 50.0;
        let speed = 10.0;
        let pts: Vec<TrajectoryPoint> = (-5..=5)
            .map(|k| {
                let s = k as f64;
                let phi = s / radius;
                TrajectoryPoint::new(
                    s / speed,
                    radius * phi.cos(),
                    radius * phi.sin(),
                    speed,
                    phi + PI / 2.0,
                )
            })
            .collect();
        let traj = Trajectory::new(pts).unwrap();
        let u = traj.tangent_unit(0.0).unwrap();
        assert!(u.ux().abs() < 1e-3 && (u.uy() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn tangent_falls_back_to_heading_when_stationary() {
        let traj = Trajectory::new(vec![
            TrajectoryPoint::new(0.0, 1.0, 1.0, 0.0, 0.7),
            TrajectoryPoint::new(1.0, 1.0, 1.0, 0.0, 0.7),
        ])
        .unwrap();
        let u = traj.tangent_unit(0.5).unwrap();
        assert!((u.angle() - 0.7).abs() < 1e-12);
    }

    #[test]
    fn normal_examples() {
        let n = normal_unit(UnitVec2::from_angle(0.0));
        assert!((n.ux() - 0.0).abs() < 1e-15 && (n.uy() - 1.0).abs() < 1e-15);
        let n = normal_unit(UnitVec2::try_from_vec(Vec2::new(0.0, 1.0)).unwrap());
        assert_eq!((n.ux(), n.uy()), (-1.0, 0.0));
        let d = UnitVec2::try_from_vec(Vec2::new(1.0, 1.0)).unwrap();
        let n = normal_unit(d);
        assert_eq!((n.ux(), n.uy()), (-d.uy(), d.ux()));
    }

    #[test]
    fn curvature_collinear_and_circles() {
        let pts = [Vec2::new(0.0, 0.0), Vec2::new(1.0, 1.0), Vec2::new(2.0, 2.0)];
        assert_eq!(curvature_at(&pts, 1).unwrap(), 0.0);

        let ccw = circle(100.0, true, 5, 1.0);
        assert!((curvature_at(&ccw, 2).unwrap() - 0.01).abs() < 1e-6);
        let cw = circle(50.0, false, 5, 1.0);
        assert!((curvature_at(&cw, 2).unwrap() + 0.02).abs() < 1e-6);
        // endpoints copy the interior neighbour
        assert_eq!(curvature_at(&cw, 0).unwrap(), curvature_at(&cw, 1).unwrap());
        assert_eq!(curvature_at(&cw, 4).unwrap(), curvature_at(&cw, 3).unwrap());
    }

    #[test]
    fn curvature_duplicate_points_error() {
        let pts = [Vec2::new(0.0, 0.0), Vec2::new(0.0, 0.0), Vec2::new(2.0, 2.0)];
        assert!(matches!(
            curvature_at(&pts, 1),
            Err(Error::DuplicatePoints { index: 1 })
        ));
    }

    #[test]
    fn curvature_radius_sweep() {
        for radius in [10.0, 37.0, 100.0, 333.0, 1000.0] {
            let pts = circle(radius, true, 7, 1.0);
            for i in 0..pts.len() {
                let k = curvature_at(&pts, i).unwrap();
                assert!((k - 1.0 / radius).abs() < 1e-6, "R={radius} k={k}");
            }
        }
    }

    #[test]
    fn trajectory_validation() {
        assert!(Trajectory::new(vec![TrajectoryPoint::new(0.0, 0.0, 0.0, 0.0, 0.0)]).is_err());
        let bad_t = vec![
            TrajectoryPoint::new(0.0, 0.0, 0.0, 0.0, 0.0),
            TrajectoryPoint::new(0.0, 1.0, 0.0, 0.0, 0.0),
        ];
        assert!(Trajectory::new(bad_t).is_err());
        let bad_v = vec![
            TrajectoryPoint::new(0.0, 0.0, 0.0, -1.0, 0.0),
            TrajectoryPoint::new(1.0, 1.0, 0.0, 0.0, 0.0),
        ];
        assert!(Trajectory::new(bad_v).is_err());
    }
}
