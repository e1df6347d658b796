//! The JSON run configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::adaptation::AdaptationClock;
use crate::lasting::{LastingEffect, DEFAULT_Z_MAX};
use crate::optimizer::RevenueModel;
use crate::retention::{ArumSpec, RetentionCurve};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Retention curve; exactly one of `curve` and `arum` must be given.
    #[serde(default)]
    pub curve: Option<RetentionCurve>,
    #[serde(default)]
    pub arum: Option<ArumSpec>,
    #[serde(default)]
    pub revenue: Option<RevenueModel>,
    #[serde(default)]
    pub clock: Option<AdaptationClock>,
    #[serde(default)]
    pub lasting: Option<LastingEffect>,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default = "default_z_max")]
    pub z_max: u32,
    #[serde(default)]
    pub simulation: SimulationSpec,
    #[serde(default)]
    pub rate_sweep: Option<RateSweepSpec>,
    #[serde(default)]
    pub output: OutputSpec,
}

fn default_z_max() -> u32 {
    DEFAULT_Z_MAX
}

/// Missing fields fall back to the curve's default grid.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default)]
    pub min: Option<f64>,
    #[serde(default)]
    pub max: Option<f64>,
    #[serde(default)]
    pub step: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepSpec {
    pub x: f64,
    pub z: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSpec {
    #[serde(default)]
    pub n_users: Option<u64>,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Equal steps; alternative to `increments`.
    #[serde(default)]
    pub schedule: Option<StepSpec>,
    #[serde(default)]
    pub increments: Option<Vec<f64>>,
    /// Number of A/B arms, placed evenly on `(0, arm_max]`.
    #[serde(default)]
    pub arms: Option<usize>,
    #[serde(default)]
    pub arm_max: Option<f64>,
    #[serde(default)]
    pub n_per_arm: Option<u64>,
    /// Feed the estimated curve into the optimizer.
    #[serde(default)]
    pub chain: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateSweepSpec {
    pub total: f64,
    #[serde(default = "default_rate_points")]
    pub points: usize,
}

fn default_rate_points() -> usize {
    512
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
}

fn default_dir() -> PathBuf {
    PathBuf::from(".")
}

fn default_formats() -> Vec<Format> {
    vec![Format::Json, Format::Csv]
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec {
            dir: default_dir(),
            formats: default_formats(),
        }
    }
}

impl OutputSpec {
    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }
}

/// The curve a command works with: given directly or derived from an ARUM.
#[derive(Debug, Clone, PartialEq)]
pub enum Truth {
    Curve(RetentionCurve),
    Arum(ArumSpec),
}

impl Truth {
    pub fn curve(&self) -> Result<RetentionCurve> {
        match self {
            Truth::Curve(c) => Ok(c.clone()),
            Truth::Arum(a) => RetentionCurve::arum(*a),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::config(path, e.into_inner().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::config(path.display().to_string(), e.to_string()))?;
        Self::from_json(&text)
    }

    fn validate(&self) -> Result<()> {
        if self.curve.is_some() == self.arum.is_some() {
            return Err(Error::config(
                "curve",
                "exactly one of `curve` and `arum` must be given",
            ));
        }
        if self.simulation.schedule.is_some() && self.simulation.increments.is_some() {
            return Err(Error::config(
                "simulation.schedule",
                "give either `schedule` or `increments`, not both",
            ));
        }
        if let (Some(lo), Some(hi)) = (self.grid.min, self.grid.max) {
            if !(lo > 0.0 && lo < hi) {
                return Err(Error::config("grid", format!("need 0 < min < max, got {lo} and {hi}")));
            }
        }
        let at = |path: &'static str| move |e: Error| Error::config(path, e.to_string());
        if let Some(a) = &self.arum {
            a.validate().map_err(at("arum"))?;
        }
        if let Some(l) = &self.lasting {
            l.validate().map_err(at("lasting"))?;
        }
        if let Some(c) = &self.clock {
            c.validate().map_err(at("clock"))?;
        }
        if self.z_max == 0 {
            return Err(Error::config("z_max", "must be at least 1"));
        }
        Ok(())
    }

    pub fn truth(&self) -> Truth {
        match (&self.curve, &self.arum) {
            (Some(c), _) => Truth::Curve(c.clone()),
            (None, Some(a)) => Truth::Arum(*a),
            (None, None) => unreachable!("validated"),
        }
    }

    pub fn revenue(&self) -> Result<RevenueModel> {
        self.revenue
            .ok_or_else(|| Error::config("revenue", "this command needs a revenue model"))
    }
}
