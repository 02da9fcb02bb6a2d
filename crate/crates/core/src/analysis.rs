//! The four tracking error channels (speed, heading, lateral, lead/lag) on a
//! common clock, their summaries, and plot-ready exports.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufReader, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::common_clock::CommonClock;
use crate::error::{Error, Result};
use crate::geometry::{wrap_angle, Trajectory, TrajectoryPoint, TANGENT_SPEED_FLOOR};
use crate::io::{csv_error, expect_header, parse_error, write_file};
use crate::leadlag::{offset_series, OffsetSample, OffsetSeries};

pub const ERRORS_FILE: &str = "errors.csv";
pub const OFFSETS_FILE: &str = "offsets.csv";
pub const PAIRING_FILE: &str = "pairing.csv";
pub const PAIRING_FIRST_FILE: &str = "pairing_first.csv";
pub const PAIRING_LAST_FILE: &str = "pairing_last.csv";
pub const SUMMARY_FILE: &str = "summary.json";

pub const ERRORS_HEADER: [&str; 7] = [
    "t",
    "speed_error",
    "heading_error",
    "lateral_error",
    "leadlag_error",
    "target_speed",
    "leadlag_time",
];
pub const OFFSETS_HEADER: [&str; 5] = ["t", "dp", "dq", "lon_class", "lat_class"];
pub const PAIRING_HEADER: [&str; 5] = ["t", "target_x", "target_y", "tracked_x", "tracked_y"];

/// Sign conventions written into every summary.
pub const CONVENTIONS: [&str; 4] = [
    "speed_error = tracked.v - target.v (positive: too fast)",
    "heading_error = wrap(tracked.heading - target.heading) in (-pi, pi]",
    "lateral_error = (tracked - target) . left_normal (positive: left of target)",
    "leadlag_error = (tracked - target) . forward_tangent (positive: ahead of schedule)",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorRow {
    pub t: f64,
    pub speed_error: f64,
    pub heading_error: f64,
    pub lateral_error: f64,
    pub leadlag_error: f64,
    pub target_speed: f64,
}

impl ErrorRow {
    /// Lead/lag expressed as time at the target's current speed; undefined
    /// when the target is (nearly) stopped.
    pub fn leadlag_time(&self) -> Option<f64> {
        (self.target_speed >= TANGENT_SPEED_FLOOR).then(|| self.leadlag_error / self.target_speed)
    }

    pub fn channel(&self, channel: Channel) -> f64 {
        match channel {
            Channel::Speed => self.speed_error,
            Channel::Heading => self.heading_error,
            Channel::Lateral => self.lateral_error,
            Channel::LeadLag => self.leadlag_error,
        }
    }
}

/// Target and tracked positions at one common-clock tick.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pair {
    pub t: f64,
    pub target_x: f64,
    pub target_y: f64,
    pub tracked_x: f64,
    pub tracked_y: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorSeries {
    pub rows: Vec<ErrorRow>,
    pub pairs: Vec<Pair>,
    pub offsets: OffsetSeries,
    pub dt: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    Speed,
    Heading,
    Lateral,
    LeadLag,
}

impl Channel {
    pub const ALL: [Channel; 4] = [Channel::Speed, Channel::Heading, Channel::Lateral, Channel::LeadLag];

    pub fn label(self) -> &'static str {
        match self {
            Channel::Speed => "speed error",
            Channel::Heading => "heading angle error",
            Channel::Lateral => "lateral error",
            Channel::LeadLag => "lead/lag error",
        }
    }

    pub fn unit(self) -> &'static str {
        match self {
            Channel::Speed => "m/s",
            Channel::Heading => "rad",
            Channel::Lateral | Channel::LeadLag => "m",
        }
    }
}

/// Resamples both trajectories on the common clock and evaluates all four
/// channels. Lateral and lead/lag values come straight from
/// [`offset_series`].
pub fn compute_errors(target: &Trajectory, tracked: &Trajectory, dt: f64, eps: f64) -> Result<ErrorSeries> {
    let offsets = offset_series(target, tracked, dt, eps)?;
    let mut rows = Vec::with_capacity(offsets.samples.len());
    let mut pairs = Vec::with_capacity(offsets.samples.len());
    for o in &offsets.samples {
        let a: TrajectoryPoint = target.sample(o.t)?;
        let b: TrajectoryPoint = tracked.sample(o.t)?;
        rows.push(ErrorRow {
            t: o.t,
            speed_error: b.v - a.v,
            heading_error: wrap_angle(b.heading - a.heading),
            lateral_error: o.dq,
            leadlag_error: o.dp,
            target_speed: a.v,
        });
        pairs.push(Pair {
            t: o.t,
            target_x: a.x,
            target_y: a.y,
            tracked_x: b.x,
            tracked_y: b.y,
        });
    }
    Ok(ErrorSeries { rows, pairs, offsets, dt })
}

pub type Band = [f64; 2];

/// Optional reference band per channel.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bands {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speed: Option<Band>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub heading: Option<Band>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lateral: Option<Band>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub leadlag: Option<Band>,
}

impl Bands {
    /// Comparison bands for the 100 km/h highway scenario, plus the ±0.5 m
    /// compensation dead band for lead/lag.
    pub fn reference() -> Self {
        Self {
            speed: Some([-0.1, 0.5]),
            heading: Some([-0.0005, 0.0015]),
            lateral: Some([-0.0001, 0.00026]),
            leadlag: Some([-0.5, 0.5]),
        }
    }

    pub fn get(&self, channel: Channel) -> Option<Band> {
        match channel {
            Channel::Speed => self.speed,
            Channel::Heading => self.heading,
            Channel::Lateral => self.lateral,
            Channel::LeadLag => self.leadlag,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for c in Channel::ALL {
            if let Some([lo, hi]) = self.get(c) {
                if !(lo <= hi) {
                    return Err(Error::config(
                        format!("analysis.bands.{}", serde_json::to_value(c).unwrap().as_str().unwrap_or("?")),
                        format!("band [{lo}, {hi}] is empty"),
                    ));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelStats {
    pub max_abs: f64,
    pub rms: f64,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub band: Option<Band>,
    /// Fraction of samples inside `band`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coverage: Option<f64>,
}

impl ChannelStats {
    pub fn of(values: impl Iterator<Item = f64> + Clone, band: Option<Band>) -> Self {
        let mut n = 0usize;
        let (mut sum, mut sum_sq) = (0.0, 0.0);
        let (mut min, mut max, mut max_abs) = (f64::INFINITY, f64::NEG_INFINITY, 0.0f64);
        let mut inside = 0usize;
        for v in values {
            n += 1;
            sum += v;
            sum_sq += v * v;
            min = min.min(v);
            max = max.max(v);
            max_abs = max_abs.max(v.abs());
            if let Some([lo, hi]) = band {
                if v >= lo && v <= hi {
                    inside += 1;
                }
            }
        }
        let nf = n.max(1) as f64;
        Self {
            max_abs,
            rms: (sum_sq / nf).sqrt(),
            mean: sum / nf,
            min,
            max,
            band,
            coverage: band.map(|_| inside as f64 / nf),
        }
    }
}

/// Maximal runs of `|dp| > threshold`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeStats {
    pub threshold: f64,
    pub count: usize,
    /// Every episode ended (|dp| back within the threshold) before the series did.
    pub all_reentered: bool,
    pub longest_s: f64,
    pub total_s: f64,
    pub first_start_t: Option<f64>,
}

pub fn leadlag_episodes(rows: &[ErrorRow], threshold: f64, dt: f64) -> EpisodeStats {
    let mut count = 0;
    let mut run = 0usize;
    let mut longest = 0usize;
    let mut total = 0usize;
    let mut first_start_t = None;
    for r in rows {
        if r.leadlag_error.abs() > threshold {
            if run == 0 {
                count += 1;
                first_start_t.get_or_insert(r.t);
            }
            run += 1;
            total += 1;
            longest = longest.max(run);
        } else {
            run = 0;
        }
    }
    EpisodeStats {
        threshold,
        count,
        all_reentered: run == 0,
        longest_s: longest as f64 * dt,
        total_s: total as f64 * dt,
        first_start_t,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorSummary {
    pub samples: usize,
    pub t_start: f64,
    pub t_end: f64,
    pub dt: f64,
    pub eps: f64,
    pub speed: ChannelStats,
    pub heading: ChannelStats,
    pub lateral: ChannelStats,
    pub leadlag: ChannelStats,
    pub leadlag_episodes: EpisodeStats,
    pub conventions: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
}

impl ErrorSummary {
    pub fn channel(&self, channel: Channel) -> &ChannelStats {
        match channel {
            Channel::Speed => &self.speed,
            Channel::Heading => &self.heading,
            Channel::Lateral => &self.lateral,
            Channel::LeadLag => &self.leadlag,
        }
    }
}

pub fn summarize(series: &ErrorSeries, bands: &Bands, episode_threshold: f64) -> Result<ErrorSummary> {
    let rows = &series.rows;
    let (first, last) = match (rows.first(), rows.last()) {
        (Some(f), Some(l)) => (f, l),
        _ => return Err(Error::InvalidInput("cannot summarize an empty error series".into())),
    };
    let stats = |c: Channel| ChannelStats::of(rows.iter().map(move |r| r.channel(c)), bands.get(c));
    Ok(ErrorSummary {
        samples: rows.len(),
        t_start: first.t,
        t_end: last.t,
        dt: series.dt,
        eps: series.offsets.eps,
        speed: stats(Channel::Speed),
        heading: stats(Channel::Heading),
        lateral: stats(Channel::Lateral),
        leadlag: stats(Channel::LeadLag),
        leadlag_episodes: leadlag_episodes(rows, episode_threshold, series.dt),
        conventions: CONVENTIONS.iter().map(|s| s.to_string()).collect(),
        config_hash: None,
    })
}

/// Export windows, in seconds from the start and before the end of the run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PairingWindows {
    pub first_s: f64,
    pub last_s: f64,
}

impl Default for PairingWindows {
    fn default() -> Self {
        Self { first_s: 10.0, last_s: 4.0 }
    }
}

/// Pairs within the first `seconds` of the series.
pub fn first_window(series: &ErrorSeries, seconds: f64) -> &[Pair] {
    let n = window_len(series, seconds);
    &series.pairs[..n]
}

/// Pairs within the last `seconds` of the series.
pub fn last_window(series: &ErrorSeries, seconds: f64) -> &[Pair] {
    let n = window_len(series, seconds);
    &series.pairs[series.pairs.len() - n..]
}

fn window_len(series: &ErrorSeries, seconds: f64) -> usize {
    if series.pairs.is_empty() {
        return 0;
    }
    let clock = CommonClock {
        start: series.pairs[0].t,
        end: series.pairs[series.pairs.len() - 1].t,
        dt: series.dt,
        count: series.pairs.len(),
    };
    clock.ticks_within(seconds)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

pub fn write_errors_csv(w: &mut dyn Write, rows: &[ErrorRow]) -> std::io::Result<()> {
    writeln!(w, "{}", ERRORS_HEADER.join(","))?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            r.t,
            r.speed_error,
            r.heading_error,
            r.lateral_error,
            r.leadlag_error,
            r.target_speed,
            fmt_opt(r.leadlag_time())
        )?;
    }
    Ok(())
}

pub fn write_offsets_csv(w: &mut dyn Write, samples: &[OffsetSample]) -> std::io::Result<()> {
    writeln!(w, "{}", OFFSETS_HEADER.join(","))?;
    for s in samples {
        writeln!(w, "{},{},{},{},{}", s.t, s.dp, s.dq, s.lon_class, s.lat_class)?;
    }
    Ok(())
}

pub fn write_pairing_csv(w: &mut dyn Write, pairs: &[Pair]) -> std::io::Result<()> {
    writeln!(w, "{}", PAIRING_HEADER.join(","))?;
    for p in pairs {
        writeln!(w, "{},{},{},{},{}", p.t, p.target_x, p.target_y, p.tracked_x, p.tracked_y)?;
    }
    Ok(())
}

fn parse_fields<const N: usize>(record: &csv::StringRecord, names: &[&str], path: &Path) -> Result<[f64; N]> {
    let line = record.position().map_or(0, |p| p.line());
    let mut out = [0.0; N];
    for (i, slot) in out.iter_mut().enumerate() {
        let field = record
            .get(i)
            .ok_or_else(|| parse_error(path, line, format!("missing column `{}`", names[i])))?;
        *slot = field
            .parse::<f64>()
            .map_err(|e| parse_error(path, line, format!("column `{}`: {e}", names[i])))?;
    }
    Ok(out)
}

pub fn read_errors_csv(reader: impl Read, path: &Path) -> Result<Vec<ErrorRow>> {
    let mut rdr = csv::Reader::from_reader(reader);
    expect_header(&mut rdr, &ERRORS_HEADER, path)?;
    rdr.records()
        .map(|rec| {
            let rec = rec.map_err(|e| csv_error(path, e))?;
            let [t, speed_error, heading_error, lateral_error, leadlag_error, target_speed] =
                parse_fields::<6>(&rec, &ERRORS_HEADER, path)?;
            Ok(ErrorRow {
                t,
                speed_error,
                heading_error,
                lateral_error,
                leadlag_error,
                target_speed,
            })
        })
        .collect()
}

pub fn read_offsets_csv(reader: impl Read, path: &Path) -> Result<Vec<OffsetSample>> {
    let mut rdr = csv::Reader::from_reader(reader);
    expect_header(&mut rdr, &OFFSETS_HEADER, path)?;
    rdr.records()
        .map(|rec| {
            let rec = rec.map_err(|e| csv_error(path, e))?;
            let line = rec.position().map_or(0, |p| p.line());
            let [t, dp, dq] = parse_fields::<3>(&rec, &OFFSETS_HEADER, path)?;
            let class = |i: usize| rec.get(i).ok_or_else(|| parse_error(path, line, format!("missing column `{}`", OFFSETS_HEADER[i])));
            Ok(OffsetSample {
                t,
                dp,
                dq,
                lon_class: class(3)?.parse().map_err(|e: Error| parse_error(path, line, e.to_string()))?,
                lat_class: class(4)?.parse().map_err(|e: Error| parse_error(path, line, e.to_string()))?,
            })
        })
        .collect()
}

pub fn read_pairing_csv(reader: impl Read, path: &Path) -> Result<Vec<Pair>> {
    let mut rdr = csv::Reader::from_reader(reader);
    expect_header(&mut rdr, &PAIRING_HEADER, path)?;
    rdr.records()
        .map(|rec| {
            let rec = rec.map_err(|e| csv_error(path, e))?;
            let [t, target_x, target_y, tracked_x, tracked_y] = parse_fields::<5>(&rec, &PAIRING_HEADER, path)?;
            Ok(Pair {
                t,
                target_x,
                target_y,
                tracked_x,
                tracked_y,
            })
        })
        .collect()
}

fn open(path: &Path) -> Result<BufReader<fs::File>> {
    fs::File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e))
}

/// Files written by [`export`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExportedFiles {
    pub errors: PathBuf,
    pub offsets: PathBuf,
    pub pairing: PathBuf,
    pub pairing_first: PathBuf,
    pub pairing_last: PathBuf,
    pub summary: PathBuf,
}

pub fn export(series: &ErrorSeries, summary: &ErrorSummary, dir: &Path, windows: PairingWindows) -> Result<ExportedFiles> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let files = ExportedFiles {
        errors: dir.join(ERRORS_FILE),
        offsets: dir.join(OFFSETS_FILE),
        pairing: dir.join(PAIRING_FILE),
        pairing_first: dir.join(PAIRING_FIRST_FILE),
        pairing_last: dir.join(PAIRING_LAST_FILE),
        summary: dir.join(SUMMARY_FILE),
    };
    write_file(&files.errors, |w| write_errors_csv(w, &series.rows))?;
    write_file(&files.offsets, |w| write_offsets_csv(w, &series.offsets.samples))?;
    write_file(&files.pairing, |w| write_pairing_csv(w, &series.pairs))?;
    write_file(&files.pairing_first, |w| write_pairing_csv(w, first_window(series, windows.first_s)))?;
    write_file(&files.pairing_last, |w| write_pairing_csv(w, last_window(series, windows.last_s)))?;
    let json = serde_json::to_string_pretty(summary).map_err(|e| Error::InvalidInput(e.to_string()))?;
    write_file(&files.summary, |w| writeln!(w, "{json}"))?;
    Ok(files)
}

/// Reloads a series written by [`export`].
pub fn import(dir: &Path) -> Result<ErrorSeries> {
    let errors_path = dir.join(ERRORS_FILE);
    let offsets_path = dir.join(OFFSETS_FILE);
    let pairing_path = dir.join(PAIRING_FILE);
    let summary = read_summary(dir)?;
    let rows = read_errors_csv(open(&errors_path)?, &errors_path)?;
    let samples = read_offsets_csv(open(&offsets_path)?, &offsets_path)?;
    let pairs = read_pairing_csv(open(&pairing_path)?, &pairing_path)?;
    Ok(ErrorSeries {
        rows,
        pairs,
        offsets: OffsetSeries {
            samples,
            eps: summary.eps,
        },
        dt: summary.dt,
    })
}

pub fn read_summary(dir: &Path) -> Result<ErrorSummary> {
    let path = dir.join(SUMMARY_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| parse_error(&path, e.line() as u64, e.to_string()))
}

/// Human-readable digest of a summary. Band comparisons appear only for
/// channels that carry a band.
pub fn render_report(summary: &ErrorSummary) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "Spatiotemporal tracking error report");
    let _ = writeln!(
        out,
        "window: {:.3} s .. {:.3} s, {} samples at dt = {} s, eps = {} m",
        summary.t_start, summary.t_end, summary.samples, summary.dt, summary.eps
    );
    if let Some(hash) = &summary.config_hash {
        let _ = writeln!(out, "config: {hash}");
    }
    for c in Channel::ALL {
        let s = summary.channel(c);
        let u = c.unit();
        let _ = writeln!(out);
        let _ = writeln!(out, "[{}]", c.label());
        let _ = writeln!(out, "  max |e| = {:.6} {u}", s.max_abs);
        let _ = writeln!(out, "  rms     = {:.6} {u}", s.rms);
        let _ = writeln!(out, "  mean    = {:.6} {u}", s.mean);
        let _ = writeln!(out, "  range   = [{:.6}, {:.6}] {u}", s.min, s.max);
        if let (Some([lo, hi]), Some(cov)) = (s.band, s.coverage) {
            let _ = writeln!(out, "  band    = [{lo}, {hi}] {u}: {:.1}% of samples inside", cov * 100.0);
        }
        if c == Channel::LeadLag {
            let e = &summary.leadlag_episodes;
            let _ = writeln!(
                out,
                "  episodes beyond ±{} m: {} (longest {:.2} s, total {:.2} s), {}",
                e.threshold,
                e.count,
                e.longest_s,
                e.total_s,
                if e.all_reentered { "all re-entered the band" } else { "final episode still open" }
            );
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn straight(speed: f64, dx: f64, dv: f64, heading: f64) -> Trajectory {
        Trajectory::new(
            (0..=100)
                .map(|i| {
                    let t = i as f64 * 0.1;
                    TrajectoryPoint::new(t, speed * t + dx, 0.0, speed + dv, heading)
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn identical_is_zero() {
        let a = straight(10.0, 0.0, 0.0, 0.0);
        let s = compute_errors(&a, &a, 0.01, 0.01).unwrap();
        assert_eq!(s.rows.len(), 1001);
        assert!(s.rows.iter().all(|r| Channel::ALL.iter().all(|&c| r.channel(c) == 0.0)));
    }

    #[test]
    fn constant_speed_offset() {
        let a = straight(10.0, 0.0, 0.0, 0.0);
        let b = straight(10.0, 0.0, 0.3, 0.0);
        let s = compute_errors(&a, &b, 0.01, 0.01).unwrap();
        assert!(s.rows.iter().all(|r| (r.speed_error - 0.3).abs() < 1e-12));
    }

    #[test]
    fn heading_error_wraps() {
        let a = straight(10.0, 0.0, 0.0, 3.1);
        let b = straight(10.0, 0.0, 0.0, -3.1);
        let s = compute_errors(&a, &b, 0.1, 0.01).unwrap();
        let expected = -6.2 + 2.0 * PI;
        assert!(s.rows.iter().all(|r| (r.heading_error - expected).abs() < 1e-12));
        assert!((expected - 0.08319).abs() < 1e-5);
    }

    #[test]
    fn leadlag_channel_is_the_offset_series() {
        let a = straight(10.0, 0.0, 0.0, 0.0);
        let b = straight(10.0, 0.7, 0.0, 0.0);
        let s = compute_errors(&a, &b, 0.01, 0.01).unwrap();
        let o = offset_series(&a, &b, 0.01, 0.01).unwrap();
        for (r, o) in s.rows.iter().zip(&o.samples) {
            assert_eq!(r.leadlag_error.to_bits(), o.dp.to_bits());
            assert_eq!(r.lateral_error.to_bits(), o.dq.to_bits());
        }
    }

    fn series_of(values: &[f64]) -> ErrorSeries {
        let rows: Vec<ErrorRow> = values
            .iter()
            .enumerate()
            .map(|(i, &v)| ErrorRow {
                t: i as f64,
                speed_error: v,
                heading_error: v,
                lateral_error: v,
                leadlag_error: v,
                target_speed: 1.0,
            })
            .collect();
        ErrorSeries {
            rows,
            pairs: vec![],
            offsets: OffsetSeries { samples: vec![], eps: 0.01 },
            dt: 1.0,
        }
    }

    #[test]
    fn summary_constant_and_symmetric() {
        let s = summarize(&series_of(&[-0.4; 5]), &Bands::default(), 0.5).unwrap();
        assert_eq!(s.speed.max_abs, 0.4);
        assert!((s.speed.rms - 0.4).abs() < 1e-15);
        assert!((s.speed.mean + 0.4).abs() < 1e-15);
        assert!(s.speed.coverage.is_none());

        let s = summarize(&series_of(&[1.0, -1.0]), &Bands::reference(), 0.5).unwrap();
        assert_eq!((s.leadlag.max_abs, s.leadlag.rms, s.leadlag.mean), (1.0, 1.0, 0.0));
        assert_eq!(s.leadlag.coverage, Some(0.0));
        assert!(s.speed.max_abs >= s.speed.rms);
        assert!(summarize(&series_of(&[]), &Bands::default(), 0.5).is_err());
    }

    #[test]
    fn episodes() {
        let e = leadlag_episodes(&series_of(&[0.0, 0.6, 0.7, 0.1, -0.9, 0.2]).rows, 0.5, 0.01);
        assert_eq!(e.count, 2);
        assert!(e.all_reentered);
        assert!((e.longest_s - 0.02).abs() < 1e-15);
        let e = leadlag_episodes(&series_of(&[0.0, 0.6]).rows, 0.5, 0.01);
        assert!(!e.all_reentered);
    }

    #[test]
    fn pairing_windows() {
        let a = Trajectory::new(
            (0..=300)
                .map(|i| {
                    let t = i as f64 * 0.1;
                    TrajectoryPoint::new(t, t, 0.0, 1.0, 0.0)
                })
                .collect(),
        )
        .unwrap();
        let s = compute_errors(&a, &a, 0.01, 0.01).unwrap();
        assert_eq!(first_window(&s, 10.0).len(), 1001);
        let last = last_window(&s, 4.0);
        assert_eq!(last.len(), 401);
        assert_eq!(last.last().unwrap().t, s.pairs.last().unwrap().t);
    }

    #[test]
    fn export_import_round_trip() {
        let a = straight(10.0, 0.0, 0.0, 0.3);
        let b = Trajectory::new(
            a.points()
                .iter()
                .map(|p| TrajectoryPoint::new(p.t, p.x + 0.123_456_789, p.y - 0.1 / 3.0, p.v * 1.01, p.heading - 1e-3))
                .collect(),
        )
        .unwrap();
        let series = compute_errors(&a, &b, 0.01, 0.01).unwrap();
        let summary = summarize(&series, &Bands::reference(), 0.5).unwrap();
        let dir = tempfile::tempdir().unwrap();
        export(&series, &summary, dir.path(), PairingWindows::default()).unwrap();
        let back = import(dir.path()).unwrap();
        assert_eq!(back, series);
        assert_eq!(read_summary(dir.path()).unwrap(), summary);
    }

    #[test]
    fn report_lists_four_channels() {
        let s = summarize(&series_of(&[0.1, 0.2]), &Bands::reference(), 0.5).unwrap();
        let text = render_report(&s);
        for c in Channel::ALL {
            assert!(text.contains(&format!("[{}]", c.label())));
        }
        assert!(text.contains("band"));
        let bare = summarize(&series_of(&[0.1, 0.2]), &Bands::default(), 0.5).unwrap();
        assert!(!render_report(&bare).contains("band    ="));
    }
}
