//! Formation error and settling time of a logged run.

/// Default trailing window for the formation error.
pub const DEFAULT_WINDOW: usize = 200;

/// Relative band around the terminal spacing used by the settling time.
pub const SETTLING_BAND: f64 = 0.05;

/// Cyclic spacings `x_{i,i−1}(k)` of a run, one row per step.
#[derive(Debug, Clone, PartialEq)]
pub struct SpacingHistory {
    pub target: f64,
    pub series: Vec<Vec<f64>>,
}

impl SpacingHistory {
    pub fn pairs(&self) -> usize {
        self.series.first().map_or(0, Vec::len)
    }

    /// Spacing of pair `p` at every step.
    pub fn pair_series(&self, p: usize) -> impl Iterator<Item = f64> + '_ {
        self.series.iter().map(move |row| row[p])
    }
}

/// Per-run outcome.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunMetrics {
    /// Formation error `ε̂` in arclength units.
    pub eps_hat: f64,
    /// Settling time `k₅`, `None` when not settled.
    pub k5: Option<u64>,
    pub aborted: bool,
}

impl RunMetrics {
    pub fn from_history(history: &SpacingHistory, window: usize) -> Self {
        Self {
            eps_hat: formation_error(history, window),
            k5: settling_time(history),
            aborted: false,
        }
    }
}

/// Largest `|x_ij(k) − b|` over the cyclic pairs and the last `window` steps.
pub fn formation_error(history: &SpacingHistory, window: usize) -> f64 {
    let start = history.series.len().saturating_sub(window.max(1));
    history.series[start..]
        .iter()
        .flatten()
        .map(|x| (x - history.target).abs())
        .fold(0.0, f64::max)
}

/// First step after which pair `p` stays within 5% of its terminal value;
/// `None` if the terminal value is not positive.
pub fn pair_settling_instant(history: &SpacingHistory, p: usize) -> Option<u64> {
    let last = *history.series.last()?.get(p)?;
    if !(last > 0.0) {
        return None;
    }
    let band = SETTLING_BAND * last;
    let outside = history.series.iter().rposition(|row| (row[p] - last).abs() > band);
    Some(outside.map_or(0, |k| k as u64 + 1))
}

/// Settling instants of every cyclic pair.
pub fn settling_instants(history: &SpacingHistory) -> Vec<Option<u64>> {
    (0..history.pairs())
        .map(|p| pair_settling_instant(history, p))
        .collect()
}

/// `k₅`: first step after which every cyclic pair stays within its band.
pub fn settling_time(history: &SpacingHistory) -> Option<u64> {
    if history.series.is_empty() {
        return None;
    }
    settling_instants(history)
        .into_iter()
        .try_fold(0, |acc, k| k.map(|k| acc.max(k)))
}
