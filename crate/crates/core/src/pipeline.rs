//! generate → simulate → analyze, driven by a [`RunConfig`].

use std::path::Path;

use serde::Serialize;

use crate::analysis::{compute_errors, summarize, ErrorSeries, ErrorSummary};
use crate::config::{AlignmentSource, RunConfig};
use crate::error::{Error, Result};
use crate::io::write_file;
use crate::geometry::Trajectory;
use crate::simulation::{simulate, SimulationOutput};
use crate::target::{
    apply_speed_noise, build_speed_profile, load_centerline, synth_alignment, to_trajectory, validate_centerline,
    CenterlinePoint,
};

#[derive(Debug, Clone)]
pub struct GeneratedTarget {
    pub centerline: Vec<CenterlinePoint>,
    /// Noise-free speed profile.
    pub profile: Vec<f64>,
    pub trajectory: Trajectory,
    pub warnings: Vec<String>,
}

pub fn generate_target(cfg: &RunConfig) -> Result<GeneratedTarget> {
    let (centerline, warnings) = match cfg.alignment.source()? {
        AlignmentSource::Spec(spec) => (synth_alignment(&spec, cfg.alignment.spacing)?, Vec::new()),
        AlignmentSource::Centerline(path) => {
            let points = load_centerline(path)?;
            let warnings = validate_centerline(&points)?;
            (points, warnings)
        }
    };
    let profile = build_speed_profile(&centerline, &cfg.speed_profile)?;
    let noisy = apply_speed_noise(&profile, &cfg.speed_profile);
    let trajectory = to_trajectory(&centerline, &noisy)?;
    Ok(GeneratedTarget {
        centerline,
        profile,
        trajectory,
        warnings,
    })
}

pub fn simulate_target(cfg: &RunConfig, target: &Trajectory) -> Result<SimulationOutput> {
    simulate(target, &cfg.simulation, &cfg.controllers())
}

/// Error series and summary, stamped with the config hash.
pub fn analyze(cfg: &RunConfig, target: &Trajectory, tracked: &Trajectory) -> Result<(ErrorSeries, ErrorSummary)> {
    let series = compute_errors(target, tracked, cfg.simulation.dt, cfg.simulation.eps)?;
    let mut summary = summarize(&series, &cfg.analysis.bands, cfg.episode_threshold())?;
    summary.config_hash = Some(cfg.hash());
    Ok((series, summary))
}

/// Everything one configured run produces.
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub target: GeneratedTarget,
    pub simulation: SimulationOutput,
    pub series: ErrorSeries,
    pub summary: ErrorSummary,
}

pub fn run(cfg: &RunConfig) -> Result<RunArtifacts> {
    cfg.validate()?;
    let target = generate_target(cfg)?;
    let simulation = simulate_target(cfg, &target.trajectory)?;
    let (series, summary) = analyze(cfg, &target.trajectory, &simulation.tracked)?;
    Ok(RunArtifacts {
        target,
        simulation,
        series,
        summary,
    })
}

pub const MANIFEST_FILE: &str = "manifest.json";

/// Written next to every set of outputs so each file can be traced back to
/// the exact configuration that produced it.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
    pub files: Vec<String>,
}

impl Manifest {
    pub fn new(command: &str, cfg: &RunConfig, files: Vec<String>) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            config_hash: cfg.hash(),
            seed: cfg.speed_profile.seed,
            files,
        }
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        write_json(&dir.join(MANIFEST_FILE), self)
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::InvalidInput(e.to_string()))?;
    write_file(path, |w| writeln!(w, "{text}"))
}
