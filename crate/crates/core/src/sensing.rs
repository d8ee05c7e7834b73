//! Proximity sensor model: range-dependent detection and bounded noise.

use serde::{Deserialize, Serialize};

use crate::curve::DistanceInterval;
use crate::error::{Error, Result};
use crate::rng::CounterRng;

/// Distribution of the additive measurement noise on `[-phi, phi]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseLaw {
    #[default]
    Uniform,
    /// `±phi` with equal probability.
    Extremes,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorSpec {
    /// Range within which a reading is always available.
    pub r_sure: f64,
    /// Range beyond which no reading is ever available.
    pub r_max: f64,
    /// Detection probability in `(r_sure, r_max]`.
    pub q_bar: f64,
    /// Noise amplitude bound.
    pub phi: f64,
    #[serde(default)]
    pub noise: NoiseLaw,
}

/// Outcome of one sensing attempt.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Reading {
    Absent,
    Present(f64),
}

impl Reading {
    pub fn value(&self) -> Option<f64> {
        match *self {
            Reading::Present(y) => Some(y),
            Reading::Absent => None,
        }
    }
}

/// Reading of pair `(i, j)` at `step`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementEvent {
    pub step: u64,
    pub i: usize,
    pub j: usize,
    pub reading: Reading,
}

impl SensorSpec {
    pub fn new(r_sure: f64, r_max: f64, q_bar: f64, phi: f64) -> Result<Self> {
        let spec = Self {
            r_sure,
            r_max,
            q_bar,
            phi,
            noise: NoiseLaw::Uniform,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r_sure > 0.0 && self.r_sure < self.r_max && self.r_max.is_finite()) {
            return Err(Error::Config(format!(
                "sensor ranges must satisfy 0 < r_sure < r_max, got {} and {}",
                self.r_sure, self.r_max
            )));
        }
        if !(self.q_bar > 0.0 && self.q_bar < 1.0) {
            return Err(Error::Config(format!("q_bar must lie in (0, 1), got {}", self.q_bar)));
        }
        if !(self.phi >= 0.0 && self.phi.is_finite()) {
            return Err(Error::Config(format!("phi must be non-negative, got {}", self.phi)));
        }
        Ok(())
    }

    pub fn detection_probability(&self, m: f64) -> Result<f64> {
        if !(m >= 0.0) {
            return Err(Error::Domain(format!("distance must be non-negative, got {m}")));
        }
        Ok(if m <= self.r_sure {
            1.0
        } else if m <= self.r_max {
            self.q_bar
        } else {
            0.0
        })
    }

    /// Draws detection, then noise, from `rng`.
    pub fn sample(&self, m: f64, rng: &mut CounterRng) -> Result<Reading> {
        let q = self.detection_probability(m)?;
        let detected = rng.bernoulli(q);
        if !detected {
            return Ok(Reading::Absent);
        }
        let v = match self.noise {
            NoiseLaw::Uniform => rng.uniform(-self.phi, self.phi),
            NoiseLaw::Extremes => {
                if rng.bernoulli(0.5) {
                    self.phi
                } else {
                    -self.phi
                }
            }
        };
        Ok(Reading::Present(m + v))
    }

    /// Distances compatible with a present reading `y`:
    /// `[max(y − phi, 0), min(y + phi, r_max)]`.
    pub fn distance_interval(&self, y: f64) -> Result<DistanceInterval> {
        let lo = (y - self.phi).max(0.0);
        let hi = (y + self.phi).min(self.r_max);
        if lo > hi {
            return Err(Error::Contract(format!(
                "reading {y} is incompatible with r_max = {} and phi = {}",
                self.r_max, self.phi
            )));
        }
        DistanceInterval::new(lo, hi)
    }
}
