//! Per-agent decentralized estimation and control.
//!
//! Each agent keeps, for every peer it tracks, a multi-interval `Γ` that is
//! guaranteed to contain the peer's relative arc position
//! `x_ij = rem(p_i − p_j, l)`. At every step the estimate is propagated through
//! the relative dynamics with an interval bound on the peer's input, then
//! intersected with the set `Υ` of positions compatible with the latest
//! (possibly missing) reading.
//!
//! Once one peer's estimate is provably the closest one behind the agent, that
//! peer becomes the agent's follower, every other estimate is dropped, and the
//! agent drives its spacing to the follower towards `b = l/N` with a
//! three-level input `{0, d, d + K}`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::circle::{Hull, Interval, MultiInterval};
use crate::error::{Error, Result};

/// Outward padding added to every predicted shift, relative to `l`. It
/// absorbs floating-point rounding between the estimator and the ground truth.
pub const PREDICTION_PAD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlParams {
    /// Reference speed of the pacemaker.
    pub d: f64,
    /// Bang-bang gain.
    pub k_gain: f64,
    /// Target spacing `b = l/N`.
    pub target: f64,
}

impl ControlParams {
    pub fn new(d: f64, k_gain: f64, length: f64, agents: usize) -> Result<Self> {
        if !(d > 0.0 && d.is_finite()) {
            return Err(Error::Config(format!("d must be positive, got {d}")));
        }
        if !(k_gain > 0.0 && k_gain.is_finite()) {
            return Err(Error::Config(format!("K must be positive, got {k_gain}")));
        }
        if agents < 2 {
            return Err(Error::Config(format!("need at least 2 agents, got {agents}")));
        }
        Ok(Self {
            d,
            k_gain,
            target: length / agents as f64,
        })
    }

    pub fn fast(&self) -> f64 {
        self.d + self.k_gain
    }
}

/// Follower bookkeeping after identification.
#[derive(Debug, Clone, PartialEq)]
pub struct Lock {
    pub follower: usize,
    pub gamma: MultiInterval,
    pub k_identify: u64,
    pub k_bar: Option<u64>,
    pub hull_at_identify: Hull,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Tracking {
    /// Estimates of every peer, before the follower is known.
    Searching {
        gammas: BTreeMap<usize, MultiInterval>,
    },
    Locked(Lock),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentState {
    id: usize,
    pacemaker: bool,
    tracking: Tracking,
    last_input: f64,
    initialized: bool,
}

impl AgentState {
    pub fn new(id: usize, pacemaker: bool) -> Self {
        Self {
            id,
            pacemaker,
            tracking: Tracking::Searching {
                gammas: BTreeMap::new(),
            },
            last_input: 0.0,
            initialized: false,
        }
    }

    pub fn id(&self) -> usize {
        self.id
    }

    pub fn is_pacemaker(&self) -> bool {
        self.pacemaker
    }

    pub fn tracking(&self) -> &Tracking {
        &self.tracking
    }

    pub fn last_input(&self) -> f64 {
        self.last_input
    }

    pub fn follower(&self) -> Option<usize> {
        match &self.tracking {
            Tracking::Locked(lock) => Some(lock.follower),
            Tracking::Searching { .. } => None,
        }
    }

    pub fn lock(&self) -> Option<&Lock> {
        match &self.tracking {
            Tracking::Locked(lock) => Some(lock),
            Tracking::Searching { .. } => None,
        }
    }

    /// Current estimate `Γ^{ij}(k|k)`, if `j` is tracked.
    pub fn estimate(&self, j: usize) -> Option<&MultiInterval> {
        match &self.tracking {
            Tracking::Searching { gammas } => gammas.get(&j),
            Tracking::Locked(lock) => (lock.follower == j).then_some(&lock.gamma),
        }
    }

    pub fn tracked_peers(&self) -> Vec<usize> {
        match &self.tracking {
            Tracking::Searching { gammas } => gammas.keys().copied().collect(),
            Tracking::Locked(lock) => vec![lock.follower],
        }
    }

    /// `Γ^{ij}(0|0) = Υ^{ij}(0)`.
    pub fn init_estimates(&mut self, upsilon0: BTreeMap<usize, MultiInterval>, params: &ControlParams) {
        debug_assert!(!upsilon0.contains_key(&self.id));
        self.tracking = Tracking::Searching { gammas: upsilon0 };
        self.last_input = if self.pacemaker { params.d } else { 0.0 };
        self.initialized = true;
    }

    /// Interval `Û_j(k)` bounding peer `j`'s input at step `k`.
    pub fn input_estimate(&self, j: usize, params: &ControlParams, k: u64) -> Result<Interval> {
        let any = Interval::new_unchecked(0.0, params.fast());
        match &self.tracking {
            Tracking::Searching { .. } => Ok(any),
            Tracking::Locked(lock) => {
                if j != lock.follower {
                    return Err(Error::Contract(format!("agent {} no longer tracks peer {j}", self.id)));
                }
                Ok(if k < lock.k_identify {
                    any
                } else if lock.k_bar.is_some_and(|kb| k >= kb) {
                    Interval::point(params.d)
                } else {
                    Interval::new_unchecked(params.d, params.fast())
                })
            }
        }
    }

    /// `Γ^{ij}(k|k−1) = rem(Γ^{ij}(k−1|k−1) + u_i(k−1) − Û_j(k−1), l)`.
    pub fn predict(&self, j: usize, params: &ControlParams, k: u64) -> Result<MultiInterval> {
        let gamma = self
            .estimate(j)
            .ok_or_else(|| Error::Contract(format!("agent {} does not track peer {j}", self.id)))?;
        if gamma.is_empty() {
            return Err(Error::Contradiction {
                agent: self.id,
                peer: j,
                step: k.saturating_sub(1),
            });
        }
        let peer_input = self.input_estimate(j, params, k.saturating_sub(1))?;
        let shift = Interval::point(self.last_input)
            .minkowski_difference(&peer_input)
            .inflate(PREDICTION_PAD * gamma.circumference());
        Ok(gamma.rem_shift(&shift))
    }

    /// Identifies the follower if exactly one tracked estimate lies entirely
    /// ahead of zero and below every other positive candidate position.
    pub fn try_identify_follower(&mut self, k: u64) {
        let Tracking::Searching { gammas } = &self.tracking else {
            return;
        };
        let hulls: Vec<(usize, Hull)> = gammas
            .iter()
            .filter_map(|(&j, g)| g.hull().ok().map(|h| (j, h)))
            .collect();

        let chosen = hulls.iter().find(|(j, h)| {
            h.lo() > 0.0
                && gammas.iter().filter(|(other, _)| *other != j).all(|(_, g)| {
                    g.parts()
                        .iter()
                        .filter(|p| p.hi() > 0.0)
                        .all(|p| h.hi() < p.lo().max(0.0))
                })
        });

        if let Some(&(follower, hull)) = chosen {
            let Tracking::Searching { gammas } = &mut self.tracking else {
                unreachable!()
            };
            let gamma = gammas.remove(&follower).expect("follower is tracked");
            self.tracking = Tracking::Locked(Lock {
                follower,
                gamma,
                k_identify: k,
                k_bar: None,
                hull_at_identify: hull,
            });
        }
    }

    /// Records `k̄_i`, the first step after identification at which the
    /// follower hull no longer meets the hull stored at identification.
    pub fn update_kbar(&mut self, k: u64) {
        if let Tracking::Locked(lock) = &mut self.tracking {
            if lock.k_bar.is_some() || k <= lock.k_identify {
                return;
            }
            if let Ok(h) = lock.gamma.hull() {
                if !h.intersects(&lock.hull_at_identify) {
                    lock.k_bar = Some(k);
                }
            }
        }
    }

    /// Input `u_i(k)`; also stored as the agent's last input.
    pub fn control(&mut self, params: &ControlParams) -> f64 {
        let u = if self.pacemaker {
            params.d
        } else {
            match &self.tracking {
                Tracking::Searching { .. } => 0.0,
                Tracking::Locked(lock) => match lock.gamma.hull() {
                    Ok(h) if params.target - h.lo() > 0.0 => params.fast(),
                    _ => params.d,
                },
            }
        };
        self.last_input = u;
        u
    }

    /// One estimation-and-control round at step `k`.
    ///
    /// `upsilon(j)` returns the set of relative positions compatible with the
    /// reading of peer `j` at step `k`; it is only called for tracked peers.
    pub fn step<F>(&mut self, k: u64, params: &ControlParams, peers: &[usize], mut upsilon: F) -> Result<f64>
    where
        F: FnMut(usize) -> Result<MultiInterval>,
    {
        if self.pacemaker {
            self.initialized = true;
            return Ok(self.control(params));
        }
        if !self.initialized {
            let mut init = BTreeMap::new();
            for &j in peers.iter().filter(|&&j| j != self.id) {
                init.insert(j, upsilon(j)?);
            }
            self.init_estimates(init, params);
        } else {
            for j in self.tracked_peers() {
                let predicted = self.predict(j, params, k)?;
                let corrected = correct(&predicted, &upsilon(j)?).map_err(|e| match e {
                    Error::EmptySet => Error::Contradiction {
                        agent: self.id,
                        peer: j,
                        step: k,
                    },
                    other => other,
                })?;
                match &mut self.tracking {
                    Tracking::Searching { gammas } => {
                        gammas.insert(j, corrected);
                    }
                    Tracking::Locked(lock) => lock.gamma = corrected,
                }
            }
        }
        if let Some((&j, _)) = match &self.tracking {
            Tracking::Searching { gammas } => gammas.iter().find(|(_, g)| g.is_empty()),
            Tracking::Locked(_) => None,
        } {
            return Err(Error::Contradiction {
                agent: self.id,
                peer: j,
                step: k,
            });
        }
        self.try_identify_follower(k);
        self.update_kbar(k);
        Ok(self.control(params))
    }
}

/// `Γ(k|k) = Γ(k|k−1) ∩ Υ(k)`; an empty result is an error.
pub fn correct(predicted: &MultiInterval, upsilon: &MultiInterval) -> Result<MultiInterval> {
    let out = predicted.intersect(upsilon)?;
    if out.is_empty() {
        return Err(Error::EmptySet);
    }
    Ok(out)
}
