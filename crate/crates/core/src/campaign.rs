//! Factorial Monte Carlo campaigns over the control gain `K` and the noise
//! bound `phi`, with per-run and per-cell CSV reports.
//!
//! `runs.csv` columns: `k_index,phi_index,k_gain,phi,replication,seed,
//! eps_hat,eps_over_b,k5,aborted,estimate_misses,input_misses,
//! wrong_followers,order_violations`. `k5` is `NA` for runs that did not
//! settle; `aborted` is `0` or `1`.
//!
//! `summary.csv` columns: `k_index,phi_index,k_gain,phi,runs,aborted,
//! not_settled,mean_eps_over_b,max_eps_over_b,mean_k5`. `mean_k5` averages
//! the settled runs only and is `NA` if there are none.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;

use crate::config::CampaignSpecFile;
use crate::engine::{overtaking_gap, run_into, SimConfig, SpacingSink, StepSink, Tee};
use crate::error::{Error, Result};
use crate::metrics::RunMetrics;
use crate::trajectory::CsvTrajectoryWriter;

pub const RUNS_HEADER: [&str; 14] = [
    "k_index",
    "phi_index",
    "k_gain",
    "phi",
    "replication",
    "seed",
    "eps_hat",
    "eps_over_b",
    "k5",
    "aborted",
    "estimate_misses",
    "input_misses",
    "wrong_followers",
    "order_violations",
];

pub const SUMMARY_HEADER: [&str; 10] = [
    "k_index",
    "phi_index",
    "k_gain",
    "phi",
    "runs",
    "aborted",
    "not_settled",
    "mean_eps_over_b",
    "max_eps_over_b",
    "mean_k5",
];

const NOT_SETTLED: &str = "NA";

#[derive(Debug, Clone)]
pub struct CampaignSpec {
    /// Every field except `k_gain`, `sensor.phi` and `seed` is shared.
    pub base: SimConfig,
    /// Absolute gains.
    pub k_levels: Vec<f64>,
    /// Noise bounds as multiples of the gain of the cell.
    pub phi_levels: Vec<f64>,
    pub replications: u64,
    pub seed_base: u64,
    pub window: usize,
    pub save_trajectories: bool,
}

impl CampaignSpec {
    /// The reference grid: `K ∈ {0.5d, d, 1.5d, 2d}`, `phi ∈ {2K, 3K, 4K}`.
    pub fn reference(replications: u64, seed_base: u64) -> Self {
        let base = SimConfig::reference(0.003, 0.006);
        let d = base.d;
        Self {
            base,
            k_levels: vec![0.5 * d, d, 1.5 * d, 2.0 * d],
            phi_levels: vec![2.0, 3.0, 4.0],
            replications,
            seed_base,
            window: crate::metrics::DEFAULT_WINDOW,
            save_trajectories: false,
        }
    }

    pub fn from_file(file: &CampaignSpecFile, base_dir: &Path) -> Result<Self> {
        let curve = Arc::new(file.base.build_curve(base_dir)?);
        let mut base_file = file.base.clone();
        let k_max = file.k_levels.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let phi_max = file
            .k_levels
            .iter()
            .flat_map(|k| file.phi_levels.iter().map(move |m| k * m))
            .fold(f64::NEG_INFINITY, f64::max);
        // placeholders; every cell overrides them
        base_file.k_gain.get_or_insert(k_max);
        base_file.sensor.phi.get_or_insert(phi_max);
        let base = base_file.to_config(curve, Some(overtaking_gap(phi_max, file.base.d, k_max)))?;
        let spec = Self {
            base,
            k_levels: file.k_levels.clone(),
            phi_levels: file.phi_levels.clone(),
            replications: file.replications,
            seed_base: file.seed_base,
            window: file.window,
            save_trajectories: file.save_trajectories,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let (file, dir) = CampaignSpecFile::load(path)?;
        Self::from_file(&file, &dir)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k_levels.is_empty() || self.phi_levels.is_empty() {
            return Err(Error::Config("factor levels must be non-empty".into()));
        }
        if self.replications == 0 {
            return Err(Error::Config("replications must be at least 1".into()));
        }
        if self.window == 0 {
            return Err(Error::Config("window must be at least 1".into()));
        }
        if self.phi_levels.iter().any(|m| !(*m >= 0.0 && m.is_finite())) {
            return Err(Error::Config("phi multipliers must be non-negative".into()));
        }
        if self.seed_base.checked_add(self.replications - 1).is_none() {
            return Err(Error::Config("seed_base + replications overflows".into()));
        }
        for ki in 0..self.k_levels.len() {
            for pi in 0..self.phi_levels.len() {
                self.config_for(ki, pi, 0).validate()?;
            }
        }
        Ok(())
    }

    /// `(K, phi)` of cell `(ki, pi)`.
    pub fn cell(&self, ki: usize, pi: usize) -> (f64, f64) {
        let k = self.k_levels[ki];
        (k, self.phi_levels[pi] * k)
    }

    pub fn seed(&self, replication: u64) -> u64 {
        self.seed_base + replication
    }

    pub fn config_for(&self, ki: usize, pi: usize, replication: u64) -> SimConfig {
        let (k, phi) = self.cell(ki, pi);
        let mut c = self.base.clone();
        c.k_gain = k;
        c.sensor.phi = phi;
        c.seed = self.seed(replication);
        c
    }

    pub fn total_runs(&self) -> u64 {
        (self.k_levels.len() * self.phi_levels.len()) as u64 * self.replications
    }
}

/// One line of `runs.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRow {
    pub k_index: usize,
    pub phi_index: usize,
    pub k_gain: f64,
    pub phi: f64,
    pub replication: u64,
    pub seed: u64,
    pub eps_hat: f64,
    pub eps_over_b: f64,
    pub k5: Option<u64>,
    pub aborted: bool,
    pub estimate_misses: u64,
    pub input_misses: u64,
    pub wrong_followers: u64,
    pub order_violations: u64,
}

impl RunRow {
    pub fn metrics(&self) -> RunMetrics {
        RunMetrics {
            eps_hat: self.eps_hat,
            k5: self.k5,
            aborted: self.aborted,
        }
    }

    fn fields(&self) -> [String; 14] {
        [
            self.k_index.to_string(),
            self.phi_index.to_string(),
            self.k_gain.to_string(),
            self.phi.to_string(),
            self.replication.to_string(),
            self.seed.to_string(),
            self.eps_hat.to_string(),
            self.eps_over_b.to_string(),
            self.k5.map_or_else(|| NOT_SETTLED.to_string(), |k| k.to_string()),
            u8::from(self.aborted).to_string(),
            self.estimate_misses.to_string(),
            self.input_misses.to_string(),
            self.wrong_followers.to_string(),
            self.order_violations.to_string(),
        ]
    }
}

/// Runs one configuration, optionally streaming its trajectory to a file.
/// Contradictions are reported in the row, not as errors; I/O failures are.
pub fn execute(config: &SimConfig, window: usize, trajectory: Option<&Path>) -> Result<(RunRow, Option<Error>)> {
    let mut spacings = SpacingSink::default();
    let outcome = match trajectory {
        Some(path) => {
            let mut csv = CsvTrajectoryWriter::create(path)?;
            run_into(config, &mut Tee(&mut spacings, &mut csv as &mut dyn StepSink))
        }
        None => run_into(config, &mut spacings),
    };
    let cause = match outcome {
        Ok(()) => None,
        Err(e @ Error::Contradiction { .. }) => Some(e),
        Err(e) => return Err(e),
    };
    let aborted = cause.is_some();
    let history = spacings.history();
    let metrics = RunMetrics::from_history(&history, window);
    let audit = spacings.audit;
    let row = RunRow {
        k_index: 0,
        phi_index: 0,
        k_gain: config.k_gain,
        phi: config.sensor.phi,
        replication: 0,
        seed: config.seed,
        eps_hat: metrics.eps_hat,
        eps_over_b: metrics.eps_hat / config.target(),
        k5: if aborted { None } else { metrics.k5 },
        aborted,
        estimate_misses: audit.estimate_misses as u64,
        input_misses: audit.input_misses as u64,
        wrong_followers: audit.wrong_followers as u64,
        order_violations: audit.order_violations as u64,
    };
    Ok((row, cause))
}

/// Per-cell aggregates.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub k_index: usize,
    pub phi_index: usize,
    pub k_gain: f64,
    pub phi: f64,
    pub runs: u64,
    pub aborted: u64,
    pub not_settled: u64,
    pub mean_eps_over_b: f64,
    pub max_eps_over_b: f64,
    /// Mean over settled runs.
    pub mean_k5: Option<f64>,
}

/// Groups rows (sorted by cell) into summaries.
pub fn summarize(rows: &[RunRow]) -> Vec<CellSummary> {
    let mut out: Vec<CellSummary> = Vec::new();
    for chunk in rows.chunk_by(|a, b| (a.k_index, a.phi_index) == (b.k_index, b.phi_index)) {
        let first = &chunk[0];
        let n = chunk.len() as f64;
        let settled: Vec<u64> = chunk.iter().filter_map(|r| r.k5).collect();
        out.push(CellSummary {
            k_index: first.k_index,
            phi_index: first.phi_index,
            k_gain: first.k_gain,
            phi: first.phi,
            runs: chunk.len() as u64,
            aborted: chunk.iter().filter(|r| r.aborted).count() as u64,
            not_settled: chunk.iter().filter(|r| r.k5.is_none()).count() as u64,
            mean_eps_over_b: chunk.iter().map(|r| r.eps_over_b).sum::<f64>() / n,
            max_eps_over_b: chunk.iter().map(|r| r.eps_over_b).fold(0.0, f64::max),
            mean_k5: (!settled.is_empty())
                .then(|| settled.iter().map(|&k| k as f64).sum::<f64>() / settled.len() as f64),
        });
    }
    out
}

impl CellSummary {
    fn fields(&self) -> [String; 10] {
        [
            self.k_index.to_string(),
            self.phi_index.to_string(),
            self.k_gain.to_string(),
            self.phi.to_string(),
            self.runs.to_string(),
            self.aborted.to_string(),
            self.not_settled.to_string(),
            self.mean_eps_over_b.to_string(),
            self.max_eps_over_b.to_string(),
            self.mean_k5.map_or_else(|| NOT_SETTLED.to_string(), |k| k.to_string()),
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignReport {
    /// Sorted by `(k_index, phi_index, replication)`.
    pub rows: Vec<RunRow>,
    pub summary: Vec<CellSummary>,
}

impl CampaignReport {
    pub fn any_aborted(&self) -> bool {
        self.rows.iter().any(|r| r.aborted)
    }

    /// Writes `runs.csv` and `summary.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_file(&dir.join("runs.csv"), |w| write_runs(&self.rows, w))?;
        write_file(&dir.join("summary.csv"), |w| write_summary(&self.summary, w))
    }
}

fn write_file(path: &Path, body: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<()> {
    let mut buf = Vec::new();
    body(&mut buf)?;
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

/// Directory holding the saved trajectories of cell `(ki, pi)`.
pub fn cell_dir(out: &Path, ki: usize, pi: usize) -> PathBuf {
    out.join(format!("cell_{ki}_{pi}"))
}

pub fn trajectory_file_name(seed: u64) -> String {
    format!("trajectory_{seed}.csv")
}

/// Runs every cell and replication on a pool of `jobs` threads (`0` picks
/// the number of cores). Trajectories are saved under `out` when the spec
/// asks for them.
pub fn run_campaign(spec: &CampaignSpec, jobs: usize, out: Option<&Path>) -> Result<CampaignReport> {
    spec.validate()?;
    if spec.save_trajectories && out.is_none() {
        return Err(Error::Config("saving trajectories needs an output directory".into()));
    }
    let mut tasks = Vec::new();
    for ki in 0..spec.k_levels.len() {
        for pi in 0..spec.phi_levels.len() {
            if spec.save_trajectories {
                let dir = cell_dir(out.expect("checked above"), ki, pi);
                fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
            }
            for r in 0..spec.replications {
                tasks.push((ki, pi, r));
            }
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let results: Vec<Result<RunRow>> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(ki, pi, r)| {
                let config = spec.config_for(ki, pi, r);
                let path = out
                    .filter(|_| spec.save_trajectories)
                    .map(|o| cell_dir(o, ki, pi).join(trajectory_file_name(config.seed)));
                let (mut row, _) = execute(&config, spec.window, path.as_deref())?;
                row.k_index = ki;
                row.phi_index = pi;
                row.replication = r;
                Ok(row)
            })
            .collect()
    });

    let mut rows = results.into_iter().collect::<Result<Vec<_>>>()?;
    rows.sort_by_key(|r| (r.k_index, r.phi_index, r.replication));
    let summary = summarize(&rows);
    Ok(CampaignReport { rows, summary })
}

pub fn write_runs<W: Write>(rows: &[RunRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RUNS_HEADER).map_err(csv_error)?;
    for r in rows {
        w.write_record(r.fields()).map_err(csv_error)?;
    }
    w.flush().map_err(|e| Error::Parse(e.to_string()))
}

pub fn write_summary<W: Write>(cells: &[CellSummary], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SUMMARY_HEADER).map_err(csv_error)?;
    for c in cells {
        w.write_record(c.fields()).map_err(csv_error)?;
    }
    w.flush().map_err(|e| Error::Parse(e.to_string()))
}

fn csv_error(e: csv::Error) -> Error {
    Error::Parse(format!("csv: {e}"))
}

fn parse_field<T: std::str::FromStr>(row: &csv::StringRecord, c: usize, name: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    let s = row.get(c).unwrap_or("");
    s.parse()
        .map_err(|e| Error::Parse(format!("column {name}: {s:?}: {e}")))
}

fn parse_optional<T: std::str::FromStr>(row: &csv::StringRecord, c: usize, name: &str) -> Result<Option<T>>
where
    T::Err: std::fmt::Display,
{
    if row.get(c) == Some(NOT_SETTLED) {
        Ok(None)
    } else {
        parse_field(row, c, name).map(Some)
    }
}

pub fn read_runs<R: Read>(input: R) -> Result<Vec<RunRow>> {
    let mut rdr = csv::Reader::from_reader(input);
    let headers = rdr.headers().map_err(csv_error)?.clone();
    if headers.iter().ne(RUNS_HEADER) {
        return Err(Error::Parse(format!("unexpected runs header {headers:?}")));
    }
    rdr.records()
        .map(|row| {
            let row = row.map_err(csv_error)?;
            let f = |c: usize| RUNS_HEADER[c];
            Ok(RunRow {
                k_index: parse_field(&row, 0, f(0))?,
                phi_index: parse_field(&row, 1, f(1))?,
                k_gain: parse_field(&row, 2, f(2))?,
                phi: parse_field(&row, 3, f(3))?,
                replication: parse_field(&row, 4, f(4))?,
                seed: parse_field(&row, 5, f(5))?,
                eps_hat: parse_field(&row, 6, f(6))?,
                eps_over_b: parse_field(&row, 7, f(7))?,
                k5: parse_optional(&row, 8, f(8))?,
                aborted: parse_field::<u8>(&row, 9, f(9))? != 0,
                estimate_misses: parse_field(&row, 10, f(10))?,
                input_misses: parse_field(&row, 11, f(11))?,
                wrong_followers: parse_field(&row, 12, f(12))?,
                order_violations: parse_field(&row, 13, f(13))?,
            })
        })
        .collect()
}

pub fn read_summary<R: Read>(input: R) -> Result<Vec<CellSummary>> {
    let mut rdr = csv::Reader::from_reader(input);
    let headers = rdr.headers().map_err(csv_error)?.clone();
    if headers.iter().ne(SUMMARY_HEADER) {
        return Err(Error::Parse(format!("unexpected summary header {headers:?}")));
    }
    rdr.records()
        .map(|row| {
            let row = row.map_err(csv_error)?;
            let f = |c: usize| SUMMARY_HEADER[c];
            Ok(CellSummary {
                k_index: parse_field(&row, 0, f(0))?,
                phi_index: parse_field(&row, 1, f(1))?,
                k_gain: parse_field(&row, 2, f(2))?,
                phi: parse_field(&row, 3, f(3))?,
                runs: parse_field(&row, 4, f(4))?,
                aborted: parse_field(&row, 5, f(5))?,
                not_settled: parse_field(&row, 6, f(6))?,
                mean_eps_over_b: parse_field(&row, 7, f(7))?,
                max_eps_over_b: parse_field(&row, 8, f(8))?,
                mean_k5: parse_optional(&row, 9, f(9))?,
            })
        })
        .collect()
}
