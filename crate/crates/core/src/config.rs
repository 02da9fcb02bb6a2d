//! Run configuration: one TOML document with a section per module.
//!
//! Precedence, lowest first: built-in defaults, the config file, CLI flags.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::{Bands, PairingWindows};
use crate::compensation::CompensationConfig;
use crate::controllers::{ControllerConfigs, DualPidConfig, LqrConfig};
use crate::error::{Error, Result};
use crate::leadlag::{DEFAULT_DT, DEFAULT_EPS};
use crate::target::{AlignmentSpec, SpeedProfileConfig};
use crate::vehicle::{VehicleParams, MAX_STEP_DT};

pub const SURROGATE_PRESET: &str = "highway-surrogate";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AlignmentConfig {
    /// Built-in alignment name.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    /// Centerline CSV (`station,x,y`), relative to the config file.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub centerline: Option<PathBuf>,
    /// Inline segment list.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spec: Option<AlignmentSpec>,
    /// Station spacing for synthesized alignments, meters.
    pub spacing: f64,
}

impl Default for AlignmentConfig {
    fn default() -> Self {
        Self {
            preset: None,
            centerline: None,
            spec: None,
            spacing: 1.0,
        }
    }
}

pub enum AlignmentSource<'a> {
    Spec(AlignmentSpec),
    Centerline(&'a Path),
}

impl AlignmentConfig {
    /// With nothing set, the highway surrogate is used.
    pub fn source(&self) -> Result<AlignmentSource<'_>> {
        match (&self.preset, &self.centerline, &self.spec) {
            (None, None, None) => Ok(AlignmentSource::Spec(AlignmentSpec::highway_surrogate())),
            (Some(name), None, None) => match name.as_str() {
                SURROGATE_PRESET => Ok(AlignmentSource::Spec(AlignmentSpec::highway_surrogate())),
                other => Err(Error::config(
                    "alignment.preset",
                    format!("unknown preset `{other}` (known: {SURROGATE_PRESET})"),
                )),
            },
            (None, Some(path), None) => Ok(AlignmentSource::Centerline(path)),
            (None, None, Some(spec)) => Ok(AlignmentSource::Spec(spec.clone())),
            _ => Err(Error::config(
                "alignment",
                "set at most one of `preset`, `centerline`, `spec`",
            )),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.spacing > 0.0 && self.spacing <= crate::target::MAX_NOMINAL_GAP) {
            return Err(Error::config(
                "alignment.spacing",
                format!("must be in (0, {}] m", crate::target::MAX_NOMINAL_GAP),
            ));
        }
        if let AlignmentSource::Spec(spec) = self.source()? {
            spec.validate().map_err(|e| match e {
                Error::Config { key, message } => Error::config(
                    key.replacen("alignment.", "alignment.spec.", 1),
                    message,
                ),
                other => other,
            })?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationConfig {
    pub dt: f64,
    /// Same-time classification tolerance, meters.
    pub eps: f64,
    /// Abort when |lateral offset| exceeds this, meters.
    pub divergence_limit: f64,
    /// Optional cap on simulated time; the run never extends past the
    /// target's last timestamp.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_duration: Option<f64>,
    /// Initial along-track offset from the first target point (+ = ahead).
    pub start_dp: f64,
    /// Initial lateral offset (+ = left).
    pub start_dq: f64,
    /// Initial speed; defaults to the first target speed.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub start_speed: Option<f64>,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            dt: DEFAULT_DT,
            eps: DEFAULT_EPS,
            divergence_limit: 20.0,
            max_duration: None,
            start_dp: 0.0,
            start_dq: 0.0,
            start_speed: None,
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt <= MAX_STEP_DT) {
            return Err(Error::config("simulation.dt", format!("must be in (0, {MAX_STEP_DT}] s")));
        }
        if !(self.eps >= 0.0 && self.eps.is_finite()) {
            return Err(Error::config("simulation.eps", "must be >= 0"));
        }
        if !(self.divergence_limit > 0.0) {
            return Err(Error::config("simulation.divergence_limit", "must be > 0"));
        }
        if let Some(d) = self.max_duration {
            if !(d > 0.0) {
                return Err(Error::config("simulation.max_duration", "must be > 0"));
            }
        }
        if !(self.start_dp.is_finite() && self.start_dq.is_finite()) {
            return Err(Error::config("simulation.start_dp", "offsets must be finite"));
        }
        if let Some(v) = self.start_speed {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::config("simulation.start_speed", "must be >= 0"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisConfig {
    /// Reference bands for the report. An empty `[analysis.bands]` table
    /// disables all comparisons.
    pub bands: Bands,
    /// Lead/lag episode threshold; defaults to the compensation threshold.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub episode_threshold: Option<f64>,
    pub pairing: PairingWindows,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            bands: Bands::reference(),
            episode_threshold: None,
            pairing: PairingWindows::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub alignment: AlignmentConfig,
    pub speed_profile: SpeedProfileConfig,
    pub vehicle: VehicleParams,
    pub lqr: LqrConfig,
    pub pid: DualPidConfig,
    pub compensation: CompensationConfig,
    pub simulation: SimulationConfig,
    pub analysis: AnalysisConfig,
}

/// CLI-level overrides, applied on top of the file.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub dt: Option<f64>,
    pub no_compensation: bool,
}

impl RunConfig {
    pub fn from_toml_str(text: &str, source: &Path) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::config(source.display().to_string(), e.to_string()))
    }

    /// Reads a config file; a relative `alignment.centerline` is resolved
    /// against the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::config(path.display().to_string(), e.to_string()))?;
        let mut cfg = Self::from_toml_str(&text, path)?;
        if let (Some(centerline), Some(dir)) = (&cfg.alignment.centerline, path.parent()) {
            if centerline.is_relative() {
                cfg.alignment.centerline = Some(dir.join(centerline));
            }
        }
        Ok(cfg)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(seed) = o.seed {
            self.speed_profile.seed = seed;
        }
        if let Some(dt) = o.dt {
            self.simulation.dt = dt;
        }
        if o.no_compensation {
            self.compensation.enabled = false;
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.alignment.validate()?;
        self.speed_profile.validate()?;
        self.vehicle.validate()?;
        self.lqr.validate()?;
        self.pid.validate()?;
        self.compensation.validate()?;
        self.simulation.validate()?;
        self.analysis.bands.validate()?;
        if let Some(th) = self.analysis.episode_threshold {
            if !(th > 0.0) {
                return Err(Error::config("analysis.episode_threshold", "must be > 0"));
            }
        }
        for (key, s) in [
            ("analysis.pairing.first_s", self.analysis.pairing.first_s),
            ("analysis.pairing.last_s", self.analysis.pairing.last_s),
        ] {
            if !(s >= 0.0 && s.is_finite()) {
                return Err(Error::config(key, "must be >= 0"));
            }
        }
        Ok(())
    }

    pub fn controllers(&self) -> ControllerConfigs {
        ControllerConfigs {
            vehicle: self.vehicle,
            lqr: self.lqr.clone(),
            pid: self.pid,
            compensation: self.compensation,
        }
    }

    pub fn episode_threshold(&self) -> f64 {
        self.analysis.episode_threshold.unwrap_or(self.compensation.threshold_m)
    }

    /// The fully resolved config as TOML.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes to TOML")
    }

    /// SHA-256 of [`RunConfig::to_toml`], hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml().as_bytes()))
    }
}
