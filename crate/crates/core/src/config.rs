//! TOML configuration files for single runs and campaigns.
//!
//! A run file uses the field names of [`SimConfig`]:
//!
//! ```toml
//! agents = 6
//! curve = "unit_square"      # or a vertex file, relative to this file
//! d = 0.003
//! k_gain = 0.003
//! horizon = 5000
//! seed = 7
//! pacemaker = 0
//!
//! [sensor]
//! r_sure = 0.32
//! r_max = 0.35
//! q_bar = 0.5
//! phi = 0.006
//! ```
//!
//! Optional keys: `resolution` (envelope cell width), `speed`,
//! `initial_positions` (explicit list), `min_gap` (for generated positions,
//! default `4·phi + 2·(d + k_gain)`), `symmetric_measurements` (default true),
//! and `sensor.noise` (`"uniform"` or `"extremes"`).

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::curve::CurveModel;
use crate::engine::{overtaking_gap, InitialPositions, SimConfig};
use crate::error::{Error, Result};
use crate::sensing::{NoiseLaw, SensorSpec};

/// Name of the built-in unit square curve.
pub const UNIT_SQUARE: &str = "unit_square";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorFile {
    pub r_sure: f64,
    pub r_max: f64,
    pub q_bar: f64,
    /// Required for single runs; campaigns set it per cell.
    pub phi: Option<f64>,
    #[serde(default)]
    pub noise: NoiseLaw,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfigFile {
    pub agents: usize,
    #[serde(default = "default_curve")]
    pub curve: String,
    pub resolution: Option<f64>,
    #[serde(default)]
    pub speed: f64,
    pub d: f64,
    /// Required for single runs; campaigns set it per cell.
    pub k_gain: Option<f64>,
    pub horizon: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub pacemaker: usize,
    pub initial_positions: Option<Vec<f64>>,
    pub min_gap: Option<f64>,
    #[serde(default = "default_true")]
    pub symmetric_measurements: bool,
    pub sensor: SensorFile,
}

fn default_curve() -> String {
    UNIT_SQUARE.to_string()
}

fn default_true() -> bool {
    true
}

impl SimConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<(Self, PathBuf)> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file = Self::parse(&text).map_err(|e| match e {
            Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
            other => other,
        })?;
        let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((file, dir))
    }

    /// Builds the curve; vertex-file paths are resolved against `base_dir`.
    pub fn build_curve(&self, base_dir: &Path) -> Result<CurveModel> {
        let vertices = if self.curve == UNIT_SQUARE {
            CurveModel::unit_square().vertices().to_vec()
        } else {
            let path = base_dir.join(&self.curve);
            let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            CurveModel::parse(&text)?
        };
        match self.resolution {
            Some(w) => CurveModel::with_resolution(vertices, w),
            None => CurveModel::new(vertices),
        }
    }

    /// Complete run configuration. `min_gap_default` is used for generated
    /// positions when the file does not set `min_gap`; `None` means
    /// `4·phi + 2·(d + k_gain)` of this run.
    pub fn to_config(&self, curve: Arc<CurveModel>, min_gap_default: Option<f64>) -> Result<SimConfig> {
        let k_gain = self
            .k_gain
            .ok_or_else(|| Error::Config("missing key `k_gain`".into()))?;
        let phi = self
            .sensor
            .phi
            .ok_or_else(|| Error::Config("missing key `sensor.phi`".into()))?;
        let sensor = SensorSpec {
            r_sure: self.sensor.r_sure,
            r_max: self.sensor.r_max,
            q_bar: self.sensor.q_bar,
            phi,
            noise: self.sensor.noise,
        };
        let initial = match &self.initial_positions {
            Some(p) => InitialPositions::Explicit(p.clone()),
            None => InitialPositions::Generate {
                min_gap: self
                    .min_gap
                    .or(min_gap_default)
                    .unwrap_or_else(|| overtaking_gap(phi, self.d, k_gain)),
            },
        };
        let config = SimConfig {
            agents: self.agents,
            curve,
            speed: self.speed,
            d: self.d,
            k_gain,
            sensor,
            horizon: self.horizon,
            seed: self.seed,
            pacemaker: self.pacemaker,
            initial,
            symmetric_measurements: self.symmetric_measurements,
        };
        config.validate()?;
        Ok(config)
    }

    /// Parses and builds a complete run configuration from `path`.
    pub fn load_config(path: impl AsRef<Path>) -> Result<SimConfig> {
        let (file, dir) = Self::load(path)?;
        let curve = Arc::new(file.build_curve(&dir)?);
        file.to_config(curve, None)
    }
}

/// Campaign file: a `[base]` run table plus the factor levels.
///
/// ```toml
/// k_levels = [0.0015, 0.003, 0.0045, 0.006]   # absolute gains
/// phi_levels = [2.0, 3.0, 4.0]                # multiples of each gain
/// replications = 100
/// seed_base = 1
/// ```
///
/// Replication `r` of every cell uses seed `seed_base + r`. Unless
/// `base.min_gap` or explicit positions are given, initial positions are
/// generated with `4·phi_max + 2·(d + K_max)` over the whole grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignSpecFile {
    pub k_levels: Vec<f64>,
    pub phi_levels: Vec<f64>,
    pub replications: u64,
    #[serde(default)]
    pub seed_base: u64,
    #[serde(default = "default_window")]
    pub window: usize,
    #[serde(default)]
    pub save_trajectories: bool,
    pub base: SimConfigFile,
}

fn default_window() -> usize {
    crate::metrics::DEFAULT_WINDOW
}

impl CampaignSpecFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<(Self, PathBuf)> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file = Self::parse(&text).map_err(|e| match e {
            Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
            other => other,
        })?;
        let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((file, dir))
    }
}
