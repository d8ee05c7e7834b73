//! Trajectory log files.
//!
//! One CSV file per run with header `step,kind,i,j,v0,v1`. Floats use the
//! shortest representation that round-trips exactly. Row kinds:
//!
//! | kind          | step | i                | j               | v0             | v1           |
//! |---------------|------|------------------|-----------------|----------------|--------------|
//! | `meta`        | `T`  | agents `N`       | pacemaker       | length `l`     | target `b`   |
//! | `seed`        | `T`  | seed             |                 |                |              |
//! | `position`    | `k`  | agent            |                 | `p_i(k)`       |              |
//! | `spacing`     | `k`  | `i`              | `i−1` (cyclic)  | `x_{i,i−1}(k)` |              |
//! | `input`       | `k`  | agent            |                 | `u_i(k)`       |              |
//! | `estimate`    | `k`  | agent            | follower        | hull low       | hull high    |
//! | `lock`        | `k`  | agent            | follower        | `k_i`          | `k̄_i` or empty |
//! | `measurement` | `k`  | `i`              | `j`             | reading or empty if absent | |
//! | `audit`       | `k`  | estimate misses  | input misses    | wrong followers | order preserved (1/0) |
//!
//! `meta` and `seed` come first; every step then lists its rows in the order
//! above. `estimate` and `lock` rows appear only for agents that have
//! identified their follower.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use crate::engine::{cyclic_pairs, RunMeta, StepRecord, StepSink, TrajectoryLog};
use crate::error::{Error, Result};
use crate::metrics::SpacingHistory;
use crate::sensing::Reading;

pub const HEADER: [&str; 6] = ["step", "kind", "i", "j", "v0", "v1"];

/// Records between explicit flushes of a file-backed writer.
const FLUSH_EVERY: u64 = 100;

/// Streams step records to CSV.
pub struct CsvTrajectoryWriter<W: Write> {
    out: csv::Writer<W>,
    pairs: Vec<(usize, usize)>,
}

impl CsvTrajectoryWriter<BufWriter<File>> {
    pub fn create(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::new(BufWriter::new(file)))
    }
}

impl<W: Write> CsvTrajectoryWriter<W> {
    pub fn new(inner: W) -> Self {
        Self {
            out: csv::WriterBuilder::new().has_headers(false).from_writer(inner),
            pairs: Vec::new(),
        }
    }

    pub fn into_inner(self) -> Result<W> {
        self.out
            .into_inner()
            .map_err(|e| Error::Parse(format!("flushing trajectory: {}", e.error())))
    }

    fn row(&mut self, fields: [&str; 6]) -> Result<()> {
        self.out.write_record(fields).map_err(csv_error)
    }
}

fn csv_error(e: csv::Error) -> Error {
    Error::Parse(format!("trajectory csv: {e}"))
}

impl<W: Write> StepSink for CsvTrajectoryWriter<W> {
    fn begin(&mut self, meta: &RunMeta) -> Result<()> {
        self.pairs = cyclic_pairs(meta.agents);
        let t = meta.horizon.to_string();
        self.row(HEADER)?;
        self.row([
            &t,
            "meta",
            &meta.agents.to_string(),
            &meta.pacemaker.to_string(),
            &meta.length.to_string(),
            &meta.target.to_string(),
        ])?;
        self.row([&t, "seed", &meta.seed.to_string(), "", "", ""])
    }

    fn record(&mut self, rec: &StepRecord) -> Result<()> {
        let k = rec.step.to_string();
        for (i, p) in rec.positions.iter().enumerate() {
            self.row([&k, "position", &i.to_string(), "", &p.to_string(), ""])?;
        }
        for (p, x) in rec.spacings.iter().enumerate() {
            let (i, j) = self.pairs[p];
            self.row([&k, "spacing", &i.to_string(), &j.to_string(), &x.to_string(), ""])?;
        }
        for (i, u) in rec.inputs.iter().enumerate() {
            self.row([&k, "input", &i.to_string(), "", &u.to_string(), ""])?;
        }
        for (i, a) in rec.agents.iter().enumerate() {
            if let (Some(f), Some(h)) = (a.follower, a.hull) {
                let (i, f) = (i.to_string(), f.to_string());
                self.row([&k, "estimate", &i, &f, &h.lo().to_string(), &h.hi().to_string()])?;
            }
        }
        for (i, a) in rec.agents.iter().enumerate() {
            if let (Some(f), Some(ki)) = (a.follower, a.k_identify) {
                let kb = a.k_bar.map(|v| v.to_string()).unwrap_or_default();
                self.row([&k, "lock", &i.to_string(), &f.to_string(), &ki.to_string(), &kb])?;
            }
        }
        for m in &rec.measurements {
            let y = match m.reading {
                Reading::Present(y) => y.to_string(),
                Reading::Absent => String::new(),
            };
            self.row([&k, "measurement", &m.i.to_string(), &m.j.to_string(), &y, ""])?;
        }
        let a = &rec.audit;
        self.row([
            &k,
            "audit",
            &a.estimate_misses.to_string(),
            &a.input_misses.to_string(),
            &a.wrong_followers.to_string(),
            if a.order_preserved { "1" } else { "0" },
        ])?;
        if rec.step.is_multiple_of(FLUSH_EVERY) {
            self.out.flush().map_err(|e| Error::Parse(e.to_string()))?;
        }
        Ok(())
    }

    fn finish(&mut self) -> Result<()> {
        self.out.flush().map_err(|e| Error::Parse(e.to_string()))
    }
}

/// Writes a complete in-memory log.
pub fn write_log<W: Write>(log: &TrajectoryLog, out: W) -> Result<W> {
    let mut w = CsvTrajectoryWriter::new(out);
    w.begin(&log.meta)?;
    for rec in &log.records {
        w.record(rec)?;
    }
    w.finish()?;
    w.into_inner()
}

/// Header information and spacing history recovered from a trajectory file.
#[derive(Debug, Clone, PartialEq)]
pub struct PersistedRun {
    pub meta: RunMeta,
    pub history: SpacingHistory,
    /// Steps whose audit row reported any violation.
    pub audit_failures: u64,
}

pub fn read_trajectory(path: impl AsRef<Path>) -> Result<PersistedRun> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_trajectory(std::io::BufReader::new(file)).map_err(|e| match e {
        Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn parse_trajectory<R: Read>(input: R) -> Result<PersistedRun> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let headers = rdr.headers().map_err(csv_error)?.clone();
    if headers.iter().ne(HEADER) {
        return Err(Error::Parse(format!("unexpected header {headers:?}")));
    }

    let mut meta: Option<RunMeta> = None;
    let mut seed: Option<u64> = None;
    let mut series: Vec<Vec<f64>> = Vec::new();
    let mut audit_failures = 0;

    for (n, row) in rdr.records().enumerate() {
        let row = row.map_err(csv_error)?;
        let line = n + 2;
        let field = |c: usize| row.get(c).unwrap_or("");
        let int = |c: usize| -> Result<u64> {
            field(c)
                .parse::<u64>()
                .map_err(|e| Error::Parse(format!("line {line}, column {}: {e}", HEADER[c])))
        };
        let float = |c: usize| -> Result<f64> {
            field(c)
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("line {line}, column {}: {e}", HEADER[c])))
        };
        match field(1) {
            "meta" => {
                meta = Some(RunMeta {
                    agents: int(2)? as usize,
                    pacemaker: int(3)? as usize,
                    length: float(4)?,
                    target: float(5)?,
                    horizon: int(0)?,
                    seed: 0,
                });
            }
            "seed" => seed = Some(int(2)?),
            "spacing" => {
                let m = meta.ok_or_else(|| Error::Parse(format!("line {line}: spacing before meta")))?;
                let k = int(0)? as usize;
                if k == series.len() {
                    series.push(Vec::with_capacity(m.agents));
                } else if k + 1 != series.len() {
                    return Err(Error::Parse(format!("line {line}: step {k} out of order")));
                }
                series[k].push(float(4)?);
            }
            "audit" => {
                if int(2)? != 0 || int(3)? != 0 || int(4)? != 0 || int(5)? != 1 {
                    audit_failures += 1;
                }
            }
            "position" | "input" | "estimate" | "lock" | "measurement" => {}
            other => return Err(Error::Parse(format!("line {line}: unknown row kind {other:?}"))),
        }
    }

    let mut meta = meta.ok_or_else(|| Error::Parse("missing meta row".into()))?;
    meta.seed = seed.ok_or_else(|| Error::Parse("missing seed row".into()))?;
    if let Some(k) = series.iter().position(|row| row.len() != meta.agents) {
        return Err(Error::Parse(format!("step {k} has {} spacings", series[k].len())));
    }
    Ok(PersistedRun {
        history: SpacingHistory {
            target: meta.target,
            series,
        },
        meta,
        audit_failures,
    })
}
