//! Ground truth and the synchronous step pipeline.
//!
//! Step `k` runs, in order: true pairwise distances, sensing, per-agent
//! estimation (predict, correct, follower identification, `k̄` update), control
//! `u_i(k)`, logging, and finally the move `p_i(k+1) = p_i(k) + s + u_i(k)`.

use std::sync::Arc;

use crate::agent::{AgentState, ControlParams};
use crate::circle::{wrap_mod, wrap_rem, Hull, MultiInterval};
use crate::curve::CurveModel;
use crate::error::{Error, Result};
use crate::metrics::SpacingHistory;
use crate::rng::{CounterRng, TAG_INITIAL, TAG_MEASURE};
use crate::sensing::{MeasurementEvent, Reading, SensorSpec};

/// How the initial positions are chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialPositions {
    /// Explicit positions in `[0, l)`; sorted before use.
    Explicit(Vec<f64>),
    /// Rejection-sampled so that every cyclic gap is at least `min_gap`.
    Generate { min_gap: f64 },
}

/// Minimum initial gap `4·phi_max + 2·(d + K_max)` that rules out overtaking.
pub fn overtaking_gap(phi_max: f64, d: f64, k_max: f64) -> f64 {
    4.0 * phi_max + 2.0 * (d + k_max)
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub agents: usize,
    pub curve: Arc<CurveModel>,
    /// Intrinsic speed `s`.
    pub speed: f64,
    pub d: f64,
    pub k_gain: f64,
    pub sensor: SensorSpec,
    pub horizon: u64,
    pub seed: u64,
    pub pacemaker: usize,
    pub initial: InitialPositions,
    /// One shared reading per unordered pair (`true`) or one per direction.
    pub symmetric_measurements: bool,
}

impl SimConfig {
    /// Six agents on the unit square with the sensor ranges, pacemaker speed
    /// and initial-gap rule of the reference experiments. The gap is sized for
    /// the largest gain and noise of the reference grid (`K = 2d`, `phi = 4K`),
    /// so every cell of the grid draws from the same admissible set.
    pub fn reference(k_gain: f64, phi: f64) -> Self {
        let d = 0.003;
        Self {
            agents: 6,
            curve: Arc::new(CurveModel::unit_square()),
            speed: 0.0,
            d,
            k_gain,
            sensor: SensorSpec::new(0.32, 0.35, 0.5, phi).expect("valid reference sensor"),
            horizon: 5000,
            seed: 0,
            pacemaker: 0,
            initial: InitialPositions::Generate {
                min_gap: overtaking_gap(8.0 * d, d, 2.0 * d),
            },
            symmetric_measurements: true,
        }
    }

    pub fn control_params(&self) -> Result<ControlParams> {
        ControlParams::new(self.d, self.k_gain, self.curve.length(), self.agents)
    }

    pub fn target(&self) -> f64 {
        self.curve.length() / self.agents as f64
    }

    pub fn validate(&self) -> Result<()> {
        self.control_params()?;
        self.sensor.validate()?;
        if self.pacemaker >= self.agents {
            return Err(Error::Config(format!(
                "pacemaker {} out of range for {} agents",
                self.pacemaker, self.agents
            )));
        }
        if !self.speed.is_finite() {
            return Err(Error::Config("speed must be finite".into()));
        }
        if self.sensor.r_sure >= self.curve.max_distance() {
            return Err(Error::Config(format!(
                "r_sure {} exceeds the curve's largest chord {}",
                self.sensor.r_sure,
                self.curve.max_distance()
            )));
        }
        Ok(())
    }

    /// Initial positions for this config, sorted ascending.
    pub fn initial_positions(&self) -> Result<Vec<f64>> {
        let l = self.curve.length();
        match &self.initial {
            InitialPositions::Explicit(p) => {
                if p.len() != self.agents {
                    return Err(Error::Config(format!(
                        "expected {} initial positions, got {}",
                        self.agents,
                        p.len()
                    )));
                }
                let mut p = p.clone();
                if p.iter().any(|x| !(0.0..l).contains(x)) {
                    return Err(Error::Config(format!("initial positions must lie in [0, {l})")));
                }
                p.sort_by(f64::total_cmp);
                if p.windows(2).any(|w| w[0] == w[1]) {
                    return Err(Error::Config("initial positions must be distinct".into()));
                }
                Ok(p)
            }
            InitialPositions::Generate { min_gap } => {
                let mut rng = CounterRng::stream(self.seed, &[TAG_INITIAL]);
                generate_initial_positions(self.agents, l, *min_gap, &mut rng)
            }
        }
    }
}

/// Rejection-samples `n` sorted positions in `[0, l)` whose cyclic gaps are
/// all at least `min_gap`.
pub fn generate_initial_positions(n: usize, l: f64, min_gap: f64, rng: &mut CounterRng) -> Result<Vec<f64>> {
    const MAX_ATTEMPTS: usize = 1_000_000;
    if n == 0 || !(min_gap >= 0.0) || n as f64 * min_gap > l {
        return Err(Error::Config(format!(
            "cannot place {n} agents with gaps of at least {min_gap} on a curve of length {l}"
        )));
    }
    for _ in 0..MAX_ATTEMPTS {
        let mut p: Vec<f64> = (0..n).map(|_| rng.uniform(0.0, l)).collect();
        p.sort_by(f64::total_cmp);
        let ok = cyclic_gaps(&p, l).all(|g| g >= min_gap);
        if ok {
            return Ok(p);
        }
    }
    Err(Error::Config(format!(
        "no admissible initial positions found after {MAX_ATTEMPTS} attempts (min_gap {min_gap})"
    )))
}

/// Forward gaps `p[i] − p[i−1]` around the circle, including the wrap gap.
fn cyclic_gaps(p: &[f64], l: f64) -> impl Iterator<Item = f64> + '_ {
    (0..p.len()).map(move |i| {
        let prev = if i == 0 { p[p.len() - 1] } else { p[i - 1] };
        wrap_mod(p[i] - prev, l)
    })
}

/// Cyclic spacing pairs `(i, i−1)`: `(1,0), (2,1), …, (N−1,N−2), (0,N−1)`.
pub fn cyclic_pairs(n: usize) -> Vec<(usize, usize)> {
    (1..n).map(|i| (i, i - 1)).chain(std::iter::once((0, n - 1))).collect()
}

/// Estimator status of one agent at the end of a step.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentSnapshot {
    pub follower: Option<usize>,
    /// Hull of the follower estimate, once identified.
    pub hull: Option<Hull>,
    pub k_identify: Option<u64>,
    pub k_bar: Option<u64>,
}

/// Ground-truth checks of one step. Agents never see these.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Audit {
    /// Tracked (agent, peer) estimates.
    pub tracked: usize,
    /// Tracked estimates not containing the true relative position.
    pub estimate_misses: usize,
    /// Tracked peers whose true input lies outside the input estimate.
    pub input_misses: usize,
    /// Agents whose identified follower is not their true predecessor.
    pub wrong_followers: usize,
    /// Whether the cyclic order of the agents is still the initial one.
    pub order_preserved: bool,
}

impl Audit {
    pub fn is_clean(&self) -> bool {
        self.estimate_misses == 0 && self.input_misses == 0 && self.wrong_followers == 0 && self.order_preserved
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub step: u64,
    /// `p_i(k)`.
    pub positions: Vec<f64>,
    /// `x_{i,i−1}(k)` in [`cyclic_pairs`] order.
    pub spacings: Vec<f64>,
    /// `u_i(k)`.
    pub inputs: Vec<f64>,
    pub agents: Vec<AgentSnapshot>,
    pub measurements: Vec<MeasurementEvent>,
    pub audit: Audit,
}

/// Static description of a run, written ahead of the step records.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunMeta {
    pub agents: usize,
    pub pacemaker: usize,
    pub length: f64,
    pub target: f64,
    pub horizon: u64,
    pub seed: u64,
}

impl RunMeta {
    pub fn from_config(config: &SimConfig) -> Self {
        Self {
            agents: config.agents,
            pacemaker: config.pacemaker,
            length: config.curve.length(),
            target: config.target(),
            horizon: config.horizon,
            seed: config.seed,
        }
    }
}

/// Receives step records as they are produced.
pub trait StepSink {
    fn begin(&mut self, _meta: &RunMeta) -> Result<()> {
        Ok(())
    }
    fn record(&mut self, rec: &StepRecord) -> Result<()>;
    fn finish(&mut self) -> Result<()> {
        Ok(())
    }
}

/// In-memory log of a full run (`horizon + 1` records when complete).
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryLog {
    pub meta: RunMeta,
    pub records: Vec<StepRecord>,
}

impl TrajectoryLog {
    pub fn spacing_history(&self) -> SpacingHistory {
        SpacingHistory {
            target: self.meta.target,
            series: self.records.iter().map(|r| r.spacings.clone()).collect(),
        }
    }

    /// Sum of the per-step audits.
    pub fn audit_totals(&self) -> AuditTotals {
        let mut t = AuditTotals::default();
        for r in &self.records {
            t.add(&r.audit);
        }
        t
    }
}

/// Audit counters accumulated over a run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AuditTotals {
    pub tracked: usize,
    pub estimate_misses: usize,
    pub input_misses: usize,
    pub wrong_followers: usize,
    pub order_violations: usize,
}

impl AuditTotals {
    pub fn add(&mut self, a: &Audit) {
        self.tracked += a.tracked;
        self.estimate_misses += a.estimate_misses;
        self.input_misses += a.input_misses;
        self.wrong_followers += a.wrong_followers;
        self.order_violations += usize::from(!a.order_preserved);
    }

    pub fn is_clean(&self) -> bool {
        self.estimate_misses == 0 && self.input_misses == 0 && self.wrong_followers == 0 && self.order_violations == 0
    }
}

/// Collects the log in memory.
#[derive(Debug, Default)]
pub struct MemorySink {
    meta: Option<RunMeta>,
    records: Vec<StepRecord>,
}

impl MemorySink {
    pub fn into_log(self) -> Option<TrajectoryLog> {
        Some(TrajectoryLog {
            meta: self.meta?,
            records: self.records,
        })
    }
}

impl StepSink for MemorySink {
    fn begin(&mut self, meta: &RunMeta) -> Result<()> {
        self.meta = Some(*meta);
        Ok(())
    }

    fn record(&mut self, rec: &StepRecord) -> Result<()> {
        self.records.push(rec.clone());
        Ok(())
    }
}

/// Keeps only the spacings and audit totals; enough for run metrics.
#[derive(Debug, Default)]
pub struct SpacingSink {
    pub target: f64,
    pub series: Vec<Vec<f64>>,
    pub audit: AuditTotals,
}

impl SpacingSink {
    pub fn history(&self) -> SpacingHistory {
        SpacingHistory {
            target: self.target,
            series: self.series.clone(),
        }
    }
}

impl StepSink for SpacingSink {
    fn begin(&mut self, meta: &RunMeta) -> Result<()> {
        self.target = meta.target;
        self.series.clear();
        self.series.reserve(meta.horizon as usize + 1);
        Ok(())
    }

    fn record(&mut self, rec: &StepRecord) -> Result<()> {
        self.series.push(rec.spacings.clone());
        self.audit.add(&rec.audit);
        Ok(())
    }
}

/// Broadcasts records to two sinks.
pub struct Tee<'a, A: StepSink + ?Sized, B: StepSink + ?Sized>(pub &'a mut A, pub &'a mut B);

impl<A: StepSink + ?Sized, B: StepSink + ?Sized> StepSink for Tee<'_, A, B> {
    fn begin(&mut self, meta: &RunMeta) -> Result<()> {
        self.0.begin(meta)?;
        self.1.begin(meta)
    }
    fn record(&mut self, rec: &StepRecord) -> Result<()> {
        self.0.record(rec)?;
        self.1.record(rec)
    }
    fn finish(&mut self) -> Result<()> {
        self.0.finish()?;
        self.1.finish()
    }
}

/// A run that stopped before its horizon, with everything logged so far.
#[derive(Debug, Clone)]
pub struct RunAborted {
    pub cause: Error,
    pub log: TrajectoryLog,
}

impl std::fmt::Display for RunAborted {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "run aborted after {} steps: {}", self.log.records.len(), self.cause)
    }
}

impl std::error::Error for RunAborted {}

/// The simulated world: ground truth plus every agent's private state.
#[derive(Debug, Clone)]
pub struct World {
    config: SimConfig,
    params: ControlParams,
    agents: Vec<AgentState>,
    positions: Vec<f64>,
    ids: Vec<usize>,
    absent_set: MultiInterval,
    step: u64,
}

impl World {
    pub fn new(config: SimConfig) -> Result<Self> {
        config.validate()?;
        let params = config.control_params()?;
        let positions = config.initial_positions()?;
        let agents = (0..config.agents)
            .map(|i| AgentState::new(i, i == config.pacemaker))
            .collect();
        let absent_set = config.curve.invert_absent(config.sensor.r_sure);
        Ok(Self {
            ids: (0..config.agents).collect(),
            config,
            params,
            agents,
            positions,
            absent_set,
            step: 0,
        })
    }

    pub fn meta(&self) -> RunMeta {
        RunMeta::from_config(&self.config)
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn agents(&self) -> &[AgentState] {
        &self.agents
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    /// Index of the next step to execute.
    pub fn current_step(&self) -> u64 {
        self.step
    }

    pub fn is_finished(&self) -> bool {
        self.step > self.config.horizon
    }

    /// `x_ij = rem(p_i − p_j, l)` from the ground truth.
    pub fn relative_position(&self, i: usize, j: usize) -> f64 {
        wrap_rem(self.positions[i] - self.positions[j], self.config.curve.length())
    }

    /// Executes one step and returns its record.
    pub fn step(&mut self) -> Result<StepRecord> {
        if self.is_finished() {
            return Err(Error::Contract("horizon already reached".into()));
        }
        let k = self.step;
        let n = self.config.agents;
        let curve = Arc::clone(&self.config.curve);
        let sensor = self.config.sensor;

        let measurements = self.sense(k)?;
        let reading = |i: usize, j: usize| -> Reading {
            if self.config.symmetric_measurements {
                let (a, b) = (i.min(j), i.max(j));
                let idx = pair_index(n, a, b);
                measurements[idx].reading
            } else {
                let idx = i * (n - 1) + if j > i { j - 1 } else { j };
                measurements[idx].reading
            }
        };

        let mut inputs = vec![0.0; n];
        for (i, input) in inputs.iter_mut().enumerate() {
            let absent = &self.absent_set;
            let upsilon = |j: usize| -> Result<MultiInterval> {
                match reading(i, j) {
                    Reading::Absent => Ok(absent.clone()),
                    Reading::Present(y) => Ok(curve.invert_measured(&sensor.distance_interval(y)?)),
                }
            };
            *input = self.agents[i].step(k, &self.params, &self.ids, upsilon)?;
        }

        let record = StepRecord {
            step: k,
            positions: self.positions.clone(),
            spacings: cyclic_pairs(n)
                .into_iter()
                .map(|(i, j)| self.relative_position(i, j))
                .collect(),
            inputs: inputs.clone(),
            agents: self.agents.iter().map(snapshot).collect(),
            audit: self.audit(k, &inputs),
            measurements,
        };

        if k < self.config.horizon {
            for (p, u) in self.positions.iter_mut().zip(&inputs) {
                *p += self.config.speed + u;
            }
        }
        self.step += 1;
        Ok(record)
    }

    fn sense(&self, k: u64) -> Result<Vec<MeasurementEvent>> {
        let n = self.config.agents;
        let curve = &self.config.curve;
        let sensor = &self.config.sensor;
        let seed = self.config.seed;
        let mut events = Vec::with_capacity(n * n);
        let mut draw = |i: usize, j: usize| -> Result<()> {
            let m = curve.euclidean_distance(self.positions[i], self.positions[j]);
            let mut rng = CounterRng::stream(seed, &[TAG_MEASURE, k, i as u64, j as u64]);
            events.push(MeasurementEvent {
                step: k,
                i,
                j,
                reading: sensor.sample(m, &mut rng)?,
            });
            Ok(())
        };
        for i in 0..n {
            if self.config.symmetric_measurements {
                for j in (i + 1)..n {
                    draw(i, j)?;
                }
            } else {
                for j in (0..n).filter(|&j| j != i) {
                    draw(i, j)?;
                }
            }
        }
        Ok(events)
    }

    fn audit(&self, k: u64, inputs: &[f64]) -> Audit {
        let n = self.config.agents;
        let l = self.config.curve.length();
        let mut audit = Audit {
            order_preserved: (cyclic_gaps(&self.positions_mod(), l).sum::<f64>() - l).abs() < 1e-9 * l,
            ..Audit::default()
        };
        for agent in &self.agents {
            let i = agent.id();
            for j in agent.tracked_peers() {
                audit.tracked += 1;
                let gamma = agent.estimate(j).expect("tracked peer has an estimate");
                if !gamma.contains(self.relative_position(i, j)) {
                    audit.estimate_misses += 1;
                }
                match agent.input_estimate(j, &self.params, k) {
                    Ok(u) if u.contains(inputs[j]) => {}
                    _ => audit.input_misses += 1,
                }
            }
            if let Some(f) = agent.follower() {
                if f != self.true_predecessor(i, n) {
                    audit.wrong_followers += 1;
                }
            }
        }
        audit
    }

    /// Agent with the smallest positive relative position behind `i`.
    fn true_predecessor(&self, i: usize, n: usize) -> usize {
        let l = self.config.curve.length();
        (0..n)
            .filter(|&j| j != i)
            .min_by(|&a, &b| {
                let ga = wrap_mod(self.positions[i] - self.positions[a], l);
                let gb = wrap_mod(self.positions[i] - self.positions[b], l);
                ga.total_cmp(&gb)
            })
            .expect("at least two agents")
    }

    /// Positions reduced to `[0, l)`, in label order.
    fn positions_mod(&self) -> Vec<f64> {
        let l = self.config.curve.length();
        self.positions.iter().map(|&p| wrap_mod(p, l)).collect()
    }
}

fn pair_index(n: usize, a: usize, b: usize) -> usize {
    // rows 0..a hold (n−1) + (n−2) + … + (n−a) pairs
    a * (2 * n - a - 1) / 2 + (b - a - 1)
}

fn snapshot(agent: &AgentState) -> AgentSnapshot {
    match agent.lock() {
        Some(lock) => AgentSnapshot {
            follower: Some(lock.follower),
            hull: lock.gamma.hull().ok(),
            k_identify: Some(lock.k_identify),
            k_bar: lock.k_bar,
        },
        None => AgentSnapshot {
            follower: None,
            hull: None,
            k_identify: None,
            k_bar: None,
        },
    }
}

/// Runs `config` to its horizon, streaming records into `sink`.
pub fn run_into<S: StepSink + ?Sized>(config: &SimConfig, sink: &mut S) -> Result<()> {
    let mut world = World::new(config.clone())?;
    sink.begin(&world.meta())?;
    let result = (|| {
        while !world.is_finished() {
            let rec = world.step()?;
            sink.record(&rec)?;
        }
        Ok(())
    })();
    let finished = sink.finish();
    result.and(finished)
}

/// Runs `config` and returns the full log.
pub fn run(config: &SimConfig) -> std::result::Result<TrajectoryLog, Box<RunAborted>> {
    let mut sink = MemorySink::default();
    let outcome = run_into(config, &mut sink);
    let log = sink.into_log().unwrap_or_else(|| TrajectoryLog {
        meta: RunMeta::from_config(config),
        records: Vec::new(),
    });
    match outcome {
        Ok(()) => Ok(log),
        Err(cause) => Err(Box::new(RunAborted { cause, log })),
    }
}
