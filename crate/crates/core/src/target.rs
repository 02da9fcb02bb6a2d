//! Target trajectory generation: road centerline (loaded or synthesized),
//! curvature-limited speed profile, bounded random speed perturbation and
//! timestamping.

use std::io::{Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{curvature_at, wrap_angle, Trajectory, TrajectoryPoint, Vec2};

/// Centerline gaps above this trigger a warning.
pub const MAX_NOMINAL_GAP: f64 = 2.0;
pub const MIN_ARC_RADIUS: f64 = 30.0;
/// Sub-arcs used to approximate one transition spiral.
pub const SPIRAL_PIECES: usize = 10;
/// Perturbed speeds are not pushed below this value (m/s).
pub const NOISE_SPEED_FLOOR: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CenterlinePoint {
    pub station: f64,
    pub x: f64,
    pub y: f64,
}

impl CenterlinePoint {
    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }
}

/// Checks station monotonicity and reports overly large gaps.
pub fn validate_centerline(points: &[CenterlinePoint]) -> Result<Vec<String>> {
    if points.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "centerline needs at least 2 points, got {}",
            points.len()
        )));
    }
    let mut warnings = Vec::new();
    for w in points.windows(2) {
        if !(w[1].station > w[0].station) {
            return Err(Error::InvalidInput(format!(
                "station not strictly increasing at station {}",
                w[1].station
            )));
        }
        let gap = w[1].station - w[0].station;
        if gap > MAX_NOMINAL_GAP {
            warnings.push(format!("gap of {gap:.3} m after station {}", w[0].station));
        }
    }
    Ok(warnings)
}

/// Reads a `station,x,y` CSV.
pub fn read_centerline(reader: impl Read, source: &Path) -> Result<Vec<CenterlinePoint>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| parse_error(source, 1, e.to_string()))?
        .clone();
    if headers.iter().collect::<Vec<_>>() != ["station", "x", "y"] {
        return Err(parse_error(source, 1, format!("expected header `station,x,y`, got `{}`", headers.iter().collect::<Vec<_>>().join(","))));
    }
    let mut points: Vec<CenterlinePoint> = Vec::new();
    for record in rdr.deserialize::<CenterlinePoint>() {
        let point = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_error(source, line, e.to_string())
        })?;
        if ![point.station, point.x, point.y].iter().all(|v| v.is_finite()) {
            return Err(parse_error(source, points.len() as u64 + 2, "non-finite value".into()));
        }
        if let Some(last) = points.last() {
            if !(point.station > last.station) {
                let message = if point.station == last.station {
                    format!("duplicate station {}", point.station)
                } else {
                    format!("station {} is not increasing (previous {})", point.station, last.station)
                };
                return Err(parse_error(source, points.len() as u64 + 2, message));
            }
        }
        points.push(point);
    }
    validate_centerline(&points)?;
    Ok(points)
}

pub fn load_centerline(path: &Path) -> Result<Vec<CenterlinePoint>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_centerline(std::io::BufReader::new(file), path)
}

pub fn write_centerline(writer: impl Write, points: &[CenterlinePoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for p in points {
        w.serialize(p).map_err(|e| Error::InvalidInput(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::io("<centerline>", e))?;
    Ok(())
}

fn parse_error(path: &Path, line: u64, message: String) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Turn {
    Left,
    Right,
}

impl Turn {
    fn sign(self) -> f64 {
        match self {
            Turn::Left => 1.0,
            Turn::Right => -1.0,
        }
    }
}

/// One alignment element. `heading`, when given, asserts the tangent
/// direction (radians) at the element's start.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Segment {
    Straight {
        length: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        heading: Option<f64>,
    },
    Arc {
        length: f64,
        radius: f64,
        turn: Turn,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        heading: Option<f64>,
    },
    /// Transition with curvature varying linearly from `1/start_radius` to
    /// `1/end_radius` (an absent radius means a straight end).
    #[serde(alias = "spiral-approx")]
    Spiral {
        length: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        start_radius: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        end_radius: Option<f64>,
        turn: Turn,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        heading: Option<f64>,
    },
}

impl Segment {
    pub fn length(&self) -> f64 {
        match self {
            Segment::Straight { length, .. } | Segment::Arc { length, .. } | Segment::Spiral { length, .. } => *length,
        }
    }

    fn declared_heading(&self) -> Option<f64> {
        match self {
            Segment::Straight { heading, .. } | Segment::Arc { heading, .. } | Segment::Spiral { heading, .. } => *heading,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlignmentSpec {
    #[serde(default)]
    pub start_x: f64,
    #[serde(default)]
    pub start_y: f64,
    #[serde(default)]
    pub start_heading: f64,
    pub segments: Vec<Segment>,
}

impl AlignmentSpec {
    pub fn total_length(&self) -> f64 {
        self.segments.iter().map(Segment::length).sum()
    }

    /// Synthetic 1594.433 m highway-like alignment: straights, transition
    /// spirals, one left and one right circular curve. Every curve admits
    /// close to 100 km/h at 2 m/s² lateral acceleration.
    pub fn highway_surrogate() -> Self {
        use Segment::*;
        let segments = vec![
            Straight { length: 300.0, heading: None },
            Spiral { length: 60.0, start_radius: None, end_radius: Some(600.0), turn: Turn::Left, heading: None },
            Arc { length: 250.0, radius: 600.0, turn: Turn::Left, heading: None },
            Spiral { length: 60.0, start_radius: Some(600.0), end_radius: None, turn: Turn::Left, heading: None },
            Straight { length: 200.0, heading: None },
            Spiral { length: 50.0, start_radius: None, end_radius: Some(350.0), turn: Turn::Right, heading: None },
            Arc { length: 200.0, radius: 350.0, turn: Turn::Right, heading: None },
            Spiral { length: 50.0, start_radius: Some(350.0), end_radius: None, turn: Turn::Right, heading: None },
            Straight { length: 424.433, heading: None },
        ];
        Self {
            start_x: 0.0,
            start_y: 0.0,
            start_heading: 0.0,
            segments,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.segments.is_empty() {
            return Err(Error::config("alignment.segments", "at least one segment is required"));
        }
        let check_radius = |i: usize, r: f64| {
            if !(r >= MIN_ARC_RADIUS && r.is_finite()) {
                Err(Error::config(
                    format!("alignment.segments[{i}]"),
                    format!("radius {r} must be >= {MIN_ARC_RADIUS} m"),
                ))
            } else {
                Ok(())
            }
        };
        for (i, seg) in self.segments.iter().enumerate() {
            let length = seg.length();
            if !(length > 0.0 && length.is_finite()) {
                return Err(Error::config(format!("alignment.segments[{i}].length"), "must be > 0"));
            }
            match seg {
                Segment::Straight { .. } => {}
                Segment::Arc { radius, .. } => check_radius(i, *radius)?,
                Segment::Spiral { start_radius, end_radius, .. } => {
                    for r in [start_radius, end_radius].into_iter().flatten() {
                        check_radius(i, *r)?;
                    }
                }
            }
        }
        Ok(())
    }
}

/// Constant-curvature primitive of a built alignment.
#[derive(Debug, Clone, Copy)]
struct Piece {
    station: f64,
    length: f64,
    origin: Vec2,
    heading: f64,
    curvature: f64,
}

impl Piece {
    fn at(&self, u: f64) -> (Vec2, f64) {
        let h = self.heading + self.curvature * u;
        if self.curvature.abs() < 1e-12 {
            let (s, c) = self.heading.sin_cos();
            return (self.origin + Vec2::new(c, s) * u, h);
        }
        let k = self.curvature;
        let offset = Vec2::new(
            (h.sin() - self.heading.sin()) / k,
            -(h.cos() - self.heading.cos()) / k,
        );
        (self.origin + offset, h)
    }
}

fn build_pieces(spec: &AlignmentSpec) -> Result<Vec<Piece>> {
    let mut pieces = Vec::new();
    let mut origin = Vec2::new(spec.start_x, spec.start_y);
    let mut heading = spec.start_heading;
    let mut station = 0.0;
    let mut push = |length: f64, curvature: f64, origin: &mut Vec2, heading: &mut f64, station: &mut f64| {
        let piece = Piece {
            station: *station,
            length,
            origin: *origin,
            heading: *heading,
            curvature,
        };
        let (end, end_heading) = piece.at(length);
        pieces.push(piece);
        *origin = end;
        *heading = end_heading;
        *station += length;
    };
    for (i, seg) in spec.segments.iter().enumerate() {
        if let Some(declared) = seg.declared_heading() {
            let jump = wrap_angle(declared - heading);
            if jump.abs() > 1e-6 {
                return Err(Error::Alignment(format!(
                    "discontinuous tangent at segment {i} (station {station:.3}): expected heading {:.6} rad, declared {declared:.6} rad",
                    wrap_angle(heading)
                )));
            }
        }
        match *seg {
            Segment::Straight { length, .. } => push(length, 0.0, &mut origin, &mut heading, &mut station),
            Segment::Arc { length, radius, turn, .. } => {
                push(length, turn.sign() / radius, &mut origin, &mut heading, &mut station)
            }
            Segment::Spiral { length, start_radius, end_radius, turn, .. } => {
                let k0 = start_radius.map_or(0.0, |r| 1.0 / r) * turn.sign();
                let k1 = end_radius.map_or(0.0, |r| 1.0 / r) * turn.sign();
                let sub = length / SPIRAL_PIECES as f64;
                for j in 0..SPIRAL_PIECES {
                    let frac = (j as f64 + 0.5) / SPIRAL_PIECES as f64;
                    push(sub, k0 + (k1 - k0) * frac, &mut origin, &mut heading, &mut station);
                }
            }
        }
    }
    Ok(pieces)
}

/// Samples the alignment every `spacing` meters of arc length; the final
/// station is always included.
pub fn synth_alignment(spec: &AlignmentSpec, spacing: f64) -> Result<Vec<CenterlinePoint>> {
    spec.validate()?;
    if !(spacing > 0.0 && spacing.is_finite()) {
        return Err(Error::config("alignment.spacing", "must be > 0"));
    }
    let pieces = build_pieces(spec)?;
    let total = spec.total_length();
    let n_full = (total / spacing + 1e-9).floor() as usize;
    let mut stations: Vec<f64> = (0..=n_full).map(|i| i as f64 * spacing).collect();
    if total - stations[n_full] > 1e-9 {
        stations.push(total);
    } else {
        stations[n_full] = total;
    }
    Ok(stations
        .into_iter()
        .map(|s| {
            let idx = pieces.partition_point(|p| p.station <= s).saturating_sub(1);
            let piece = &pieces[idx];
            let (p, _) = piece.at((s - piece.station).min(piece.length));
            CenterlinePoint { station: s, x: p.x, y: p.y }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpeedProfileConfig {
    pub v_desired: f64,
    pub a_accel: f64,
    /// Deceleration magnitude.
    pub a_decel: f64,
    pub a_lat_max: f64,
    pub noise_fraction: f64,
    /// Samples between independent noise draws. With 1 m stations the
    /// default keeps noise-induced acceleration near 0.3 m/s² at 100 km/h.
    pub noise_knot_every: usize,
    pub seed: u64,
    pub v_start: f64,
    pub v_end: f64,
}

impl Default for SpeedProfileConfig {
    fn default() -> Self {
        Self {
            v_desired: 100.0 / 3.6,
            a_accel: 1.0,
            a_decel: 1.0,
            a_lat_max: 2.0,
            noise_fraction: 0.02,
            noise_knot_every: 100,
            seed: 20_240_601,
            v_start: 0.0,
            v_end: 0.0,
        }
    }
}

impl SpeedProfileConfig {
    pub fn validate(&self) -> Result<()> {
        for (key, value) in [
            ("speed_profile.v_desired", self.v_desired),
            ("speed_profile.a_accel", self.a_accel),
            ("speed_profile.a_decel", self.a_decel),
            ("speed_profile.a_lat_max", self.a_lat_max),
        ] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::config(key, "must be > 0"));
            }
        }
        if !(0.0..0.5).contains(&self.noise_fraction) {
            return Err(Error::config("speed_profile.noise_fraction", "must be in [0, 0.5)"));
        }
        if self.noise_knot_every == 0 {
            return Err(Error::config("speed_profile.noise_knot_every", "must be >= 1"));
        }
        for (key, value) in [("speed_profile.v_start", self.v_start), ("speed_profile.v_end", self.v_end)] {
            if !(value >= 0.0 && value.is_finite()) {
                return Err(Error::config(key, "must be >= 0"));
            }
        }
        Ok(())
    }
}

/// Per-station speed cap from the lateral-acceleration limit.
pub fn curvature_caps(centerline: &[CenterlinePoint], cfg: &SpeedProfileConfig) -> Result<Vec<f64>> {
    let positions: Vec<Vec2> = centerline.iter().map(CenterlinePoint::position).collect();
    (0..positions.len())
        .map(|i| {
            let k = curvature_at(&positions, i)?.abs();
            Ok(if k > 0.0 {
                cfg.v_desired.min((cfg.a_lat_max / k).sqrt())
            } else {
                cfg.v_desired
            })
        })
        .collect()
}

/// Curvature-capped speed with forward (acceleration) and backward
/// (deceleration) passes on `v²`.
pub fn build_speed_profile(centerline: &[CenterlinePoint], cfg: &SpeedProfileConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    validate_centerline(centerline)?;
    let caps = curvature_caps(centerline, cfg)?;
    let n = caps.len();
    if cfg.v_start > caps[0] {
        return Err(Error::InfeasibleProfile(format!(
            "v_start {} m/s exceeds the speed cap {:.3} m/s at station {}",
            cfg.v_start, caps[0], centerline[0].station
        )));
    }
    let mut v = caps.clone();
    v[0] = cfg.v_start;
    for i in 0..n - 1 {
        let ds = centerline[i + 1].station - centerline[i].station;
        v[i + 1] = v[i + 1].min((v[i] * v[i] + 2.0 * cfg.a_accel * ds).sqrt());
    }
    v[n - 1] = v[n - 1].min(cfg.v_end);
    for i in (0..n - 1).rev() {
        let ds = centerline[i + 1].station - centerline[i].station;
        v[i] = v[i].min((v[i + 1] * v[i + 1] + 2.0 * cfg.a_decel * ds).sqrt());
    }
    if v[0] < cfg.v_start {
        return Err(Error::InfeasibleProfile(format!(
            "v_start {} m/s cannot be brought to v_end {} m/s within {:.3} m at {} m/s²",
            cfg.v_start,
            cfg.v_end,
            centerline[n - 1].station - centerline[0].station,
            cfg.a_decel
        )));
    }
    Ok(v)
}

/// Multiplies each speed by `1 + u` with `|u| <= f`. `u` is drawn uniformly
/// from a seeded ChaCha8 stream at every `noise_knot_every`-th sample and
/// interpolated linearly in between; a spacing of 1 gives independent
/// per-sample noise. Positive speeds are never pushed below `min(v, 0.1 m/s)`.
pub fn apply_speed_noise(profile: &[f64], cfg: &SpeedProfileConfig) -> Vec<f64> {
    let f = cfg.noise_fraction;
    if f == 0.0 || profile.is_empty() {
        return profile.to_vec();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let m = cfg.noise_knot_every.max(1);
    let last = profile.len() - 1;
    let mut u = vec![0.0; profile.len()];
    let mut prev: Option<(usize, f64)> = None;
    for knot in (0..=last).step_by(m).chain((last % m != 0).then_some(last)) {
        let value: f64 = rng.gen_range(-f..=f);
        if let Some((k0, u0)) = prev {
            for (i, slot) in u.iter_mut().enumerate().take(knot).skip(k0 + 1) {
                let w = (i - k0) as f64 / (knot - k0) as f64;
                *slot = u0 + (value - u0) * w;
            }
        }
        u[knot] = value;
        prev = Some((knot, value));
    }
    profile
        .iter()
        .zip(u)
        .map(|(&v, u)| (v * (1.0 + u)).max(v.min(NOISE_SPEED_FLOOR)))
        .collect()
}

/// Heading of the centerline tangent at each station: central differences
/// in the interior, one-sided at the ends.
pub fn centerline_headings(centerline: &[CenterlinePoint]) -> Vec<f64> {
    let n = centerline.len();
    (0..n)
        .map(|i| {
            let (a, b) = if i == 0 {
                (0, 1)
            } else if i == n - 1 {
                (n - 2, n - 1)
            } else {
                (i - 1, i + 1)
            };
            let d = centerline[b].position() - centerline[a].position();
            d.y.atan2(d.x)
        })
        .collect()
}

/// Timestamps the centerline: `Δt = Δs / v_mid` per interval, which is exact
/// for constant acceleration and so also covers a zero-speed start or stop.
pub fn to_trajectory(centerline: &[CenterlinePoint], profile: &[f64]) -> Result<Trajectory> {
    if centerline.len() != profile.len() {
        return Err(Error::InvalidInput(format!(
            "centerline has {} points but profile has {}",
            centerline.len(),
            profile.len()
        )));
    }
    validate_centerline(centerline)?;
    let n = profile.len();
    if let Some(i) = (1..n - 1).find(|&i| !(profile[i] > 0.0)) {
        return Err(Error::InvalidInput(format!(
            "zero speed at interior station {}",
            centerline[i].station
        )));
    }
    if profile.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::InvalidInput("speeds must be finite and >= 0".into()));
    }
    let headings = centerline_headings(centerline);
    // Compensated (Neumaier) running sum, so uniform steps land on exact totals.
    let (mut sum, mut carry) = (0.0f64, 0.0f64);
    let mut points = Vec::with_capacity(n);
    for i in 0..n {
        if i > 0 {
            let ds = centerline[i].station - centerline[i - 1].station;
            let v_mid = 0.5 * (profile[i - 1] + profile[i]);
            if !(v_mid > 0.0) {
                return Err(Error::InvalidInput(format!(
                    "interval ending at station {} has zero mean speed",
                    centerline[i].station
                )));
            }
            let dt = ds / v_mid;
            let next = sum + dt;
            carry += if sum.abs() >= dt.abs() { (sum - next) + dt } else { (dt - next) + sum };
            sum = next;
        }
        let c = &centerline[i];
        points.push(TrajectoryPoint::new(sum + carry, c.x, c.y, profile[i], headings[i]));
    }
    Trajectory::new(points)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn straight_centerline(length: usize) -> Vec<CenterlinePoint> {
        (0..=length)
            .map(|i| CenterlinePoint { station: i as f64, x: i as f64, y: 0.0 })
            .collect()
    }

    #[test]
    fn read_valid_and_duplicate() {
        let ok = "station,x,y\n0,0,0\n1,1,0\n2,2,0\n";
        let pts = read_centerline(ok.as_bytes(), Path::new("c.csv")).unwrap();
        assert_eq!(pts.len(), 3);

        let dup = "station,x,y\n0,0,0\n1,1,0\n1,2,0\n";
        let err = read_centerline(dup.as_bytes(), Path::new("c.csv")).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("duplicate station 1"), "{msg}");
        assert!(msg.contains("c.csv:4"), "{msg}");

        let bad = "station,x,y\n0,0,0\n1,oops,0\n";
        let msg = read_centerline(bad.as_bytes(), Path::new("c.csv")).unwrap_err().to_string();
        assert!(msg.contains("c.csv:3"), "{msg}");

        let header = "s,x,y\n0,0,0\n1,1,0\n";
        assert!(read_centerline(header.as_bytes(), Path::new("c.csv")).is_err());
    }

    #[test]
    fn long_export_is_accepted() {
        let mut csv = String::from("station,x,y\n");
        for i in 0..1594 {
            csv.push_str(&format!("{i},{i},0\n"));
        }
        csv.push_str("1594.433,1594.433,0\n");
        let pts = read_centerline(csv.as_bytes(), Path::new("k.csv")).unwrap();
        assert_eq!(pts.len(), 1595);
        assert!((pts.last().unwrap().station - 1594.433).abs() < 1e-12);
    }

    #[test]
    fn gap_warning() {
        let pts = vec![
            CenterlinePoint { station: 0.0, x: 0.0, y: 0.0 },
            CenterlinePoint { station: 3.0, x: 3.0, y: 0.0 },
        ];
        assert_eq!(validate_centerline(&pts).unwrap().len(), 1);
    }

    #[test]
    fn single_straight_segment() {
        let spec = AlignmentSpec {
            start_x: 0.0,
            start_y: 0.0,
            start_heading: 0.0,
            segments: vec![Segment::Straight { length: 100.0, heading: None }],
        };
        let pts = synth_alignment(&spec, 1.0).unwrap();
        assert_eq!(pts.len(), 101);
        let positions: Vec<Vec2> = pts.iter().map(|p| p.position()).collect();
        assert!(pts.iter().all(|p| p.y == 0.0));
        assert_eq!(curvature_at(&positions, 50).unwrap(), 0.0);
    }

    #[test]
    fn straight_arc_straight() {
        let spec = AlignmentSpec {
            start_x: 0.0,
            start_y: 0.0,
            start_heading: 0.0,
            segments: vec![
                Segment::Straight { length: 200.0, heading: None },
                Segment::Arc { length: 300.0, radius: 400.0, turn: Turn::Left, heading: None },
                Segment::Straight { length: 200.0, heading: None },
            ],
        };
        let pts = synth_alignment(&spec, 1.0).unwrap();
        assert_eq!(pts.last().unwrap().station, 700.0);
        let positions: Vec<Vec2> = pts.iter().map(|p| p.position()).collect();
        for i in 202..499 {
            let k = curvature_at(&positions, i).unwrap();
            assert!((k - 1.0 / 400.0).abs() < 1e-4, "i={i} k={k}");
        }
        // exit heading = 300/400 rad
        let h = centerline_headings(&pts);
        assert!((h[650] - 0.75).abs() < 1e-9);
    }

    #[test]
    fn right_turn_is_negative() {
        let spec = AlignmentSpec {
            start_x: 0.0,
            start_y: 0.0,
            start_heading: 0.0,
            segments: vec![Segment::Arc { length: 50.0, radius: 100.0, turn: Turn::Right, heading: None }],
        };
        let pts = synth_alignment(&spec, 1.0).unwrap();
        let positions: Vec<Vec2> = pts.iter().map(|p| p.position()).collect();
        assert!((curvature_at(&positions, 25).unwrap() + 0.01).abs() < 1e-6);
    }

    #[test]
    fn declared_heading_mismatch_is_rejected() {
        let spec = AlignmentSpec {
            start_x: 0.0,
            start_y: 0.0,
            start_heading: 0.0,
            segments: vec![
                Segment::Arc { length: 100.0, radius: 100.0, turn: Turn::Left, heading: None },
                Segment::Straight { length: 10.0, heading: Some(0.0) },
            ],
        };
        assert!(matches!(synth_alignment(&spec, 1.0), Err(Error::Alignment(_))));
        let ok = AlignmentSpec {
            segments: vec![
                Segment::Arc { length: 100.0, radius: 100.0, turn: Turn::Left, heading: None },
                Segment::Straight { length: 10.0, heading: Some(1.0) },
            ],
            ..spec
        };
        assert!(synth_alignment(&ok, 1.0).is_ok());
    }

    #[test]
    fn small_radius_rejected() {
        let spec = AlignmentSpec {
            start_x: 0.0,
            start_y: 0.0,
            start_heading: 0.0,
            segments: vec![Segment::Arc { length: 10.0, radius: 20.0, turn: Turn::Left, heading: None }],
        };
        assert!(matches!(synth_alignment(&spec, 1.0), Err(Error::Config { .. })));
    }

    #[test]
    fn surrogate_length() {
        let spec = AlignmentSpec::highway_surrogate();
        assert!((spec.total_length() - 1594.433).abs() < 1e-9);
        let pts = synth_alignment(&spec, 1.0).unwrap();
        assert_eq!(pts.len(), 1596);
        assert!((pts.last().unwrap().station - 1594.433).abs() < 1e-9);
    }

    #[test]
    fn profile_straight_reaches_cruise() {
        let c = straight_centerline(1000);
        let cfg = SpeedProfileConfig::default();
        let v = build_speed_profile(&c, &cfg).unwrap();
        let v_des: f64 = 100.0 / 3.6;
        // v² = 2 a s  =>  s = v² / 2a ≈ 385.8 m
        let s_reach = v_des * v_des / 2.0;
        assert!((s_reach - 385.8).abs() < 0.05);
        let first = v.iter().position(|&x| x >= v_des - 1e-9).unwrap();
        assert_eq!(first, s_reach.ceil() as usize);
        assert_eq!(v[0], 0.0);
        assert_eq!(*v.last().unwrap(), 0.0);
    }

    #[test]
    fn curve_cap() {
        let cap = (2.0_f64 * 385.8).sqrt();
        assert!((cap - 27.78).abs() < 0.01);
        let spec = AlignmentSpec {
            start_x: 0.0,
            start_y: 0.0,
            start_heading: 0.0,
            segments: vec![Segment::Arc { length: 200.0, radius: 100.0, turn: Turn::Left, heading: None }],
        };
        let c = synth_alignment(&spec, 1.0).unwrap();
        let caps = curvature_caps(&c, &SpeedProfileConfig::default()).unwrap();
        assert!((caps[100] - 200.0_f64.sqrt()).abs() < 1e-3);
    }

    #[test]
    fn infeasible_start() {
        let c = straight_centerline(10);
        let cfg = SpeedProfileConfig { v_start: 20.0, ..Default::default() };
        assert!(matches!(build_speed_profile(&c, &cfg), Err(Error::InfeasibleProfile(_))));
    }

    #[test]
    fn noise_identity_and_determinism() {
        let profile = vec![0.0, 5.0, 10.0, 0.05];
        let zero = SpeedProfileConfig { noise_fraction: 0.0, ..Default::default() };
        assert_eq!(apply_speed_noise(&profile, &zero), profile);
        let cfg = SpeedProfileConfig::default();
        assert_eq!(apply_speed_noise(&profile, &cfg), apply_speed_noise(&profile, &cfg));
        let noisy = apply_speed_noise(&profile, &cfg);
        assert_eq!(noisy[0], 0.0);
        let other = SpeedProfileConfig { seed: cfg.seed + 1, ..cfg };
        assert_ne!(apply_speed_noise(&profile, &other), noisy);
    }

    #[test]
    fn noise_statistics() {
        let profile = vec![20.0; 10_000];
        for knot in [1, 100] {
            let cfg = SpeedProfileConfig { noise_knot_every: knot, ..Default::default() };
            let noisy = apply_speed_noise(&profile, &cfg);
            assert!(noisy.iter().all(|v| (19.6..=20.4).contains(v)));
            let mean = noisy.iter().sum::<f64>() / noisy.len() as f64;
            assert!((mean - 20.0).abs() < 0.05, "{mean}");
        }
    }

    #[test]
    fn noise_knots_interpolate() {
        let profile = vec![10.0; 251];
        let per_sample = SpeedProfileConfig { noise_knot_every: 1, ..Default::default() };
        let knotted = SpeedProfileConfig { noise_knot_every: 100, ..Default::default() };
        let a = apply_speed_noise(&profile, &per_sample);
        let b = apply_speed_noise(&profile, &knotted);
        // Same stream: knots take the first draws in order, the ragged end
        // gets a knot of its own.
        assert_eq!(b[0], a[0]);
        assert_eq!(b[100], a[1]);
        assert_eq!(b[200], a[2]);
        assert_eq!(b[250], a[3]);
        let mid = 0.5 * (b[0] + b[100]);
        assert!((b[50] - mid).abs() < 1e-12);
        for w in b.windows(2) {
            assert!((w[1] - w[0]).abs() <= 2.0 * 0.02 * 10.0 / 50.0 + 1e-12);
        }
        assert!(SpeedProfileConfig { noise_knot_every: 0, ..Default::default() }.validate().is_err());
    }

    #[test]
    fn timestamping() {
        let c = straight_centerline(100);
        let traj = to_trajectory(&c, &vec![10.0; 101]).unwrap();
        assert_eq!(traj.end_time(), 10.0);
        assert!(traj.points().iter().all(|p| p.heading == 0.0));

        let c = straight_centerline(2);
        let traj = to_trajectory(&c, &[10.0, 20.0, 20.0]).unwrap();
        // hand trapezoid: 1/15 + 1/20
        assert!((traj.end_time() - (1.0 / 15.0 + 1.0 / 20.0)).abs() < 1e-9);

        // zero-speed endpoints use the constant-acceleration ramp
        let traj = to_trajectory(&c, &[0.0, 2.0, 0.0]).unwrap();
        assert!((traj.end_time() - 2.0).abs() < 1e-12);

        assert!(to_trajectory(&c, &[1.0, 0.0, 1.0]).is_err());
        assert!(to_trajectory(&c, &[1.0, 1.0]).is_err());
    }
}
