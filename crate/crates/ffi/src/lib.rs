//! C interface to the `curve-formation` simulator.
//!
//! Handles are opaque and owned by the caller, who releases them with the
//! matching `*_free` function. Every fallible function returns a
//! [`CfStatus`]; on failure a description is available from
//! [`cf_last_error_message`] on the same thread. Panics never cross the
//! boundary: they are reported as [`CfStatus::Internal`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;
use std::sync::Arc;

use curve_formation::config::SimConfigFile;
use curve_formation::engine::{self, SimConfig, TrajectoryLog};
use curve_formation::metrics::{self, RunMetrics};
use curve_formation::{trajectory, CurveModel, Error, Point};

/// Status codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Io = 4,
    Parse = 5,
    /// The run stopped on an estimator contradiction; the partial log is
    /// still returned.
    Contradiction = 6,
    OutOfRange = 7,
    Internal = 8,
}

/// Closed polyline with its distance envelope.
pub struct CfCurve {
    inner: Arc<CurveModel>,
}

/// Complete run configuration.
pub struct CfConfig {
    inner: SimConfig,
}

/// Trajectory of a finished (or aborted) run.
pub struct CfLog {
    inner: TrajectoryLog,
}

/// Parameters of [`cf_config_new`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct CfSimParams {
    pub agents: usize,
    pub pacemaker: usize,
    pub speed: f64,
    pub d: f64,
    pub k_gain: f64,
    pub r_sure: f64,
    pub r_max: f64,
    pub q_bar: f64,
    pub phi: f64,
    pub horizon: u64,
    pub seed: u64,
    /// Minimum cyclic gap of the generated initial positions.
    pub min_gap: f64,
}

/// Run metrics. `k5` is meaningful only when `settled` is non-zero.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CfMetrics {
    pub eps_hat: f64,
    pub eps_over_b: f64,
    pub k5: u64,
    pub settled: u8,
}

/// Ground-truth audit counters summed over a run.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CfAudit {
    pub tracked: u64,
    pub estimate_misses: u64,
    pub input_misses: u64,
    pub wrong_followers: u64,
    pub order_violations: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<Vec<u8>> = const { RefCell::new(Vec::new()) };
}

fn set_last_error(msg: &str) {
    LAST_ERROR.with(|e| {
        let mut e = e.borrow_mut();
        e.clear();
        e.extend(msg.bytes().filter(|&b| b != 0));
    });
}

fn status_of(err: &Error) -> CfStatus {
    match err {
        Error::Config(_) | Error::Curve(_) => CfStatus::Config,
        Error::Io { .. } => CfStatus::Io,
        Error::Parse(_) => CfStatus::Parse,
        Error::Contradiction { .. } => CfStatus::Contradiction,
        Error::Domain(_) | Error::EmptySet | Error::CircumferenceMismatch(..) => CfStatus::InvalidArgument,
        Error::Contract(_) => CfStatus::Internal,
    }
}

fn fail(status: CfStatus, msg: impl AsRef<str>) -> CfStatus {
    set_last_error(msg.as_ref());
    status
}

fn guard(body: impl FnOnce() -> CfStatus) -> CfStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(s) => s,
        Err(_) => fail(CfStatus::Internal, "panic inside curve-formation"),
    }
}

fn from_result<T>(r: Result<T, Error>, out: impl FnOnce(T)) -> CfStatus {
    match r {
        Ok(v) => {
            out(v);
            CfStatus::Ok
        }
        Err(e) => fail(status_of(&e), e.to_string()),
    }
}

unsafe fn path_arg<'a>(path: *const c_char) -> Result<&'a Path, CfStatus> {
    if path.is_null() {
        return Err(fail(CfStatus::NullPointer, "path is null"));
    }
    CStr::from_ptr(path)
        .to_str()
        .map(Path::new)
        .map_err(|_| fail(CfStatus::InvalidArgument, "path is not valid UTF-8"))
}

macro_rules! non_null {
    ($($p:ident),+) => {
        $(if $p.is_null() {
            return fail(CfStatus::NullPointer, concat!(stringify!($p), " is null"));
        })+
    };
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length excluding the NUL,
/// so a caller can size a buffer with a first call using `len = 0`.
///
/// # Safety
/// `buf` must be valid for `len` bytes or null when `len` is 0.
#[no_mangle]
pub unsafe extern "C" fn cf_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = e.len().min(len - 1);
            ptr::copy_nonoverlapping(e.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        e.len()
    })
}

/// Unit square, perimeter 4.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cf_curve_unit_square(out: *mut *mut CfCurve) -> CfStatus {
    non_null!(out);
    guard(|| {
        let curve = Box::new(CfCurve {
            inner: Arc::new(CurveModel::unit_square()),
        });
        *out = Box::into_raw(curve);
        CfStatus::Ok
    })
}

/// Closed polyline through `n` vertices given as `x0, y0, x1, y1, …`.
///
/// # Safety
/// `xy` must hold `2·n` doubles; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cf_curve_from_vertices(xy: *const f64, n: usize, out: *mut *mut CfCurve) -> CfStatus {
    non_null!(xy, out);
    guard(|| {
        let coords = std::slice::from_raw_parts(xy, 2 * n);
        let vertices = coords.chunks_exact(2).map(|c| Point::new(c[0], c[1])).collect();
        from_result(CurveModel::new(vertices), |c| {
            *out = Box::into_raw(Box::new(CfCurve { inner: Arc::new(c) }));
        })
    })
}

/// Loads a vertex file (one `x y` pair per line).
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cf_curve_load(path: *const c_char, out: *mut *mut CfCurve) -> CfStatus {
    non_null!(out);
    let path = match path_arg(path) {
        Ok(p) => p,
        Err(s) => return s,
    };
    guard(|| {
        from_result(CurveModel::load(path), |c| {
            *out = Box::into_raw(Box::new(CfCurve { inner: Arc::new(c) }));
        })
    })
}

/// # Safety
/// `curve` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn cf_curve_length(curve: *const CfCurve, out: *mut f64) -> CfStatus {
    non_null!(curve, out);
    *out = (*curve).inner.length();
    CfStatus::Ok
}

/// Euclidean distance between the points at arclengths `s1` and `s2`.
///
/// # Safety
/// `curve` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn cf_curve_distance(curve: *const CfCurve, s1: f64, s2: f64, out: *mut f64) -> CfStatus {
    non_null!(curve, out);
    if !(s1.is_finite() && s2.is_finite()) {
        return fail(CfStatus::InvalidArgument, "arclengths must be finite");
    }
    guard(|| {
        *out = (*curve).inner.euclidean_distance(s1, s2);
        CfStatus::Ok
    })
}

/// # Safety
/// `curve` must come from a `cf_curve_*` constructor or be null.
#[no_mangle]
pub unsafe extern "C" fn cf_curve_free(curve: *mut CfCurve) {
    if !curve.is_null() {
        drop(Box::from_raw(curve));
    }
}

/// Reference setup: six agents on the unit square, `d = 0.003`, `T = 5000`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cf_config_reference(k_gain: f64, phi: f64, seed: u64, out: *mut *mut CfConfig) -> CfStatus {
    non_null!(out);
    guard(|| {
        let mut c = SimConfig::reference(k_gain, phi);
        c.seed = seed;
        from_result(c.validate(), |_| {
            *out = Box::into_raw(Box::new(CfConfig { inner: c }));
        })
    })
}

/// Configuration on `curve` with generated initial positions.
///
/// # Safety
/// `curve`, `params` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn cf_config_new(
    curve: *const CfCurve,
    params: *const CfSimParams,
    out: *mut *mut CfConfig,
) -> CfStatus {
    non_null!(curve, params, out);
    guard(|| {
        let p = *params;
        let c = SimConfig {
            agents: p.agents,
            curve: Arc::clone(&(*curve).inner),
            speed: p.speed,
            d: p.d,
            k_gain: p.k_gain,
            sensor: curve_formation::SensorSpec {
                r_sure: p.r_sure,
                r_max: p.r_max,
                q_bar: p.q_bar,
                phi: p.phi,
                noise: Default::default(),
            },
            horizon: p.horizon,
            seed: p.seed,
            pacemaker: p.pacemaker,
            initial: engine::InitialPositions::Generate { min_gap: p.min_gap },
            symmetric_measurements: true,
        };
        from_result(c.validate(), |_| {
            *out = Box::into_raw(Box::new(CfConfig { inner: c }));
        })
    })
}

/// Reads a TOML run configuration.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cf_config_load(path: *const c_char, out: *mut *mut CfConfig) -> CfStatus {
    non_null!(out);
    let path = match path_arg(path) {
        Ok(p) => p,
        Err(s) => return s,
    };
    guard(|| {
        from_result(SimConfigFile::load_config(path), |c| {
            *out = Box::into_raw(Box::new(CfConfig { inner: c }));
        })
    })
}

/// # Safety
/// `config` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cf_config_set_seed(config: *mut CfConfig, seed: u64) -> CfStatus {
    non_null!(config);
    (*config).inner.seed = seed;
    CfStatus::Ok
}

/// # Safety
/// `config` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cf_config_set_horizon(config: *mut CfConfig, horizon: u64) -> CfStatus {
    non_null!(config);
    (*config).inner.horizon = horizon;
    CfStatus::Ok
}

/// # Safety
/// `config` must come from a `cf_config_*` constructor or be null.
#[no_mangle]
pub unsafe extern "C" fn cf_config_free(config: *mut CfConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Runs `config` to its horizon. On [`CfStatus::Contradiction`] `*out` still
/// receives the log up to the failing step; on other errors it is set to null.
///
/// # Safety
/// `config` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn cf_run(config: *const CfConfig, out: *mut *mut CfLog) -> CfStatus {
    non_null!(config, out);
    *out = ptr::null_mut();
    guard(|| match engine::run(&(*config).inner) {
        Ok(log) => {
            *out = Box::into_raw(Box::new(CfLog { inner: log }));
            CfStatus::Ok
        }
        Err(aborted) => {
            let status = fail(status_of(&aborted.cause), aborted.to_string());
            if status == CfStatus::Contradiction {
                *out = Box::into_raw(Box::new(CfLog { inner: aborted.log }));
            }
            status
        }
    })
}

/// Number of logged steps (`T + 1` for a complete run).
///
/// # Safety
/// `log` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn cf_log_steps(log: *const CfLog, out: *mut usize) -> CfStatus {
    non_null!(log, out);
    *out = (*log).inner.records.len();
    CfStatus::Ok
}

/// Number of agents, which is also the number of cyclic spacings per step.
///
/// # Safety
/// `log` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn cf_log_agents(log: *const CfLog, out: *mut usize) -> CfStatus {
    non_null!(log, out);
    *out = (*log).inner.meta.agents;
    CfStatus::Ok
}

/// Copies the cyclic spacings `x_{1,0}, x_{2,1}, …, x_{0,N−1}` of `step` into
/// `out`, which must hold at least `N` doubles.
///
/// # Safety
/// `log` must be valid and `out` valid for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn cf_log_spacings(log: *const CfLog, step: usize, out: *mut f64, len: usize) -> CfStatus {
    non_null!(log, out);
    let log = &(*log).inner;
    let Some(rec) = log.records.get(step) else {
        return fail(CfStatus::OutOfRange, format!("step {step} not logged"));
    };
    if len < rec.spacings.len() {
        return fail(
            CfStatus::InvalidArgument,
            format!("buffer holds {len} values, need {}", rec.spacings.len()),
        );
    }
    ptr::copy_nonoverlapping(rec.spacings.as_ptr(), out, rec.spacings.len());
    CfStatus::Ok
}

/// Formation error over the last `window` steps and settling time.
///
/// # Safety
/// `log` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn cf_log_metrics(log: *const CfLog, window: usize, out: *mut CfMetrics) -> CfStatus {
    non_null!(log, out);
    if window == 0 {
        return fail(CfStatus::InvalidArgument, "window must be at least 1");
    }
    guard(|| {
        let log = &(*log).inner;
        let m = RunMetrics::from_history(&log.spacing_history(), window);
        *out = CfMetrics {
            eps_hat: m.eps_hat,
            eps_over_b: m.eps_hat / log.meta.target,
            k5: m.k5.unwrap_or(0),
            settled: u8::from(m.k5.is_some()),
        };
        CfStatus::Ok
    })
}

/// Settling instant of cyclic pair `pair`, or `u64::MAX` if it does not settle.
///
/// # Safety
/// `log` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn cf_log_pair_settling(log: *const CfLog, pair: usize, out: *mut u64) -> CfStatus {
    non_null!(log, out);
    let log = &(*log).inner;
    if pair >= log.meta.agents {
        return fail(CfStatus::OutOfRange, format!("pair {pair} out of range"));
    }
    *out = metrics::pair_settling_instant(&log.spacing_history(), pair).unwrap_or(u64::MAX);
    CfStatus::Ok
}

/// # Safety
/// `log` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn cf_log_audit(log: *const CfLog, out: *mut CfAudit) -> CfStatus {
    non_null!(log, out);
    let t = (*log).inner.audit_totals();
    *out = CfAudit {
        tracked: t.tracked as u64,
        estimate_misses: t.estimate_misses as u64,
        input_misses: t.input_misses as u64,
        wrong_followers: t.wrong_followers as u64,
        order_violations: t.order_violations as u64,
    };
    CfStatus::Ok
}

/// Writes the trajectory CSV.
///
/// # Safety
/// `log` must be valid; `path` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn cf_log_write_csv(log: *const CfLog, path: *const c_char) -> CfStatus {
    non_null!(log);
    let path = match path_arg(path) {
        Ok(p) => p,
        Err(s) => return s,
    };
    guard(|| {
        let r = std::fs::File::create(path)
            .map_err(|e| Error::Io {
                path: path.to_path_buf(),
                message: e.to_string(),
            })
            .and_then(|f| trajectory::write_log(&(*log).inner, std::io::BufWriter::new(f)))
            .and_then(|mut w| {
                use std::io::Write;
                w.flush().map_err(|e| Error::Io {
                    path: path.to_path_buf(),
                    message: e.to_string(),
                })
            });
        from_result(r, |_| {})
    })
}

/// # Safety
/// `log` must come from [`cf_run`] or be null.
#[no_mangle]
pub unsafe extern "C" fn cf_log_free(log: *mut CfLog) {
    if !log.is_null() {
        drop(Box::from_raw(log));
    }
}
