//! Decentralized formation control on closed curves from noisy, intermittent
//! proximity measurements.
//!
//! Agents move along a closed polyline with the discrete-time integrator
//! dynamics `p_i(k+1) = p_i(k) + s + u_i(k)`. Each agent estimates the arc
//! position of its peers with guaranteed multi-interval sets, identifies the
//! peer closest behind it, and pushes away from that follower with a
//! three-level bang-bang input until the spacing reaches `l/N`.
//!
//! Module map:
//! - [`circle`]: modular arithmetic and multi-interval set operations.
//! - [`curve`]: arclength-parametrized polylines and distance inversion.
//! - [`sensing`]: the range-limited, noisy sensor model.
//! - [`agent`]: per-agent estimator and controller.
//! - [`engine`]: ground truth and the step pipeline.
//! - [`metrics`], [`campaign`]: run metrics and Monte Carlo campaigns.
//! - [`trajectory`], [`config`]: file formats.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod agent;
pub mod campaign;
pub mod circle;
pub mod config;
pub mod curve;
pub mod engine;
pub mod error;
pub mod metrics;
pub mod rng;
pub mod sensing;
pub mod trajectory;

pub use agent::{AgentState, ControlParams};
pub use circle::{Hull, Interval, MultiInterval};
pub use curve::{CurveModel, DistanceInterval, Point};
pub use engine::{run, InitialPositions, SimConfig, TrajectoryLog, World};
pub use error::{Error, Result};
pub use metrics::{RunMetrics, SpacingHistory};
pub use sensing::{Reading, SensorSpec};
