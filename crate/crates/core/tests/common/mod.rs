//! Brute-force oracles shared by the integration and acceptance tests.
//!
//! The oracles decide membership from the raw definitions of each operation
//! (pointwise, with explicit enumeration of circle wraps) and never call the
//! library's set code.

#![allow(dead_code)]

use curve_formation::curve::Point;
use curve_formation::rng::CounterRng;
use curve_formation::{CurveModel, Interval, MultiInterval};

/// Circle wraps enumerated by the oracles; enough for shifts up to `2l`.
const WRAPS: i32 = 3;

/// Raw description of a multi-interval: intervals anywhere on the line.
#[derive(Debug, Clone)]
pub struct RawSet {
    pub l: f64,
    pub parts: Vec<(f64, f64)>,
}

impl RawSet {
    pub fn random(rng: &mut CounterRng, l: f64, max_parts: usize) -> Self {
        let n = (rng.next_u64() % (max_parts as u64 + 1)) as usize;
        let parts = (0..n)
            .map(|_| {
                let lo = rng.uniform(-l, l);
                // mix of points, short and long parts
                let w = match rng.next_u64() % 4 {
                    0 => 0.0,
                    1 => rng.uniform(0.0, 0.01 * l),
                    _ => rng.uniform(0.0, 0.6 * l),
                };
                (lo, lo + w)
            })
            .collect();
        Self { l, parts }
    }

    pub fn build(&self) -> MultiInterval {
        MultiInterval::from_parts(self.l, self.parts.iter().map(|&(a, b)| Interval::new(a, b).unwrap())).unwrap()
    }

    /// `t` lies in some part after adding an integer number of turns.
    pub fn contains(&self, t: f64) -> bool {
        self.parts.iter().any(|&(a, b)| {
            (-WRAPS..=WRAPS).any(|n| {
                let s = t + n as f64 * self.l;
                a <= s && s <= b
            })
        })
    }

    /// Every finite endpoint, reduced to `[-l/2, l/2)`.
    pub fn endpoints(&self) -> Vec<f64> {
        self.parts
            .iter()
            .flat_map(|&(a, b)| [a, b])
            .map(|x| (x + 0.5 * self.l).rem_euclid(self.l) - 0.5 * self.l)
            .collect()
    }
}

/// `t ∈ rem(M ⊕ U)`: some turn `n` and part `p` admit `x ∈ p` with
/// `t + n·l − x ∈ U`.
pub fn oracle_rem_shift(m: &RawSet, u: (f64, f64), t: f64) -> bool {
    m.parts.iter().any(|&(a, b)| {
        (-WRAPS..=WRAPS).any(|n| {
            let s = t + n as f64 * m.l;
            a.max(s - u.1) <= b.min(s - u.0)
        })
    })
}

/// `t ∈ X ⊕ Y` on the line.
pub fn oracle_minkowski(x: (f64, f64), y: (f64, f64), t: f64) -> bool {
    x.0.max(t - y.1) <= x.1.min(t - y.0)
}

/// `t` lies between some part's low end and some part's high end.
pub fn oracle_hull(parts: &[(f64, f64)], t: f64) -> bool {
    parts.iter().any(|p| p.0 <= t) && parts.iter().any(|p| p.1 >= t)
}

/// Test points: uniform samples plus every boundary and its near neighbours.
pub fn probe_points(rng: &mut CounterRng, lo: f64, hi: f64, n: usize, boundaries: &[f64], nudge: f64) -> Vec<f64> {
    let mut pts: Vec<f64> = (0..n).map(|_| rng.uniform(lo, hi)).collect();
    for &b in boundaries {
        pts.extend([b, b - nudge, b + nudge]);
    }
    pts
}

/// Outcome of comparing a set against an oracle on probe points.
#[derive(Debug, Default, Clone, Copy)]
pub struct Agreement {
    pub checked: u64,
    /// Oracle member missing from the set: a soundness failure.
    pub missed: u64,
    /// Set member the oracle rejects, farther than the tolerance from any
    /// oracle boundary.
    pub spurious: u64,
}

impl Agreement {
    pub fn add(&mut self, other: Agreement) {
        self.checked += other.checked;
        self.missed += other.missed;
        self.spurious += other.spurious;
    }

    pub fn ok(&self) -> bool {
        self.missed == 0 && self.spurious == 0
    }
}

/// Compares `lib` with `oracle` on `points`. A point the set accepts but the
/// oracle rejects only counts as spurious if the oracle also rejects both
/// neighbours at distance `tol` (so it is not a rounding artifact at an edge).
pub fn compare(points: &[f64], tol: f64, lib: impl Fn(f64) -> bool, oracle: impl Fn(f64) -> bool) -> Agreement {
    let mut a = Agreement::default();
    for &t in points {
        a.checked += 1;
        let (l, o) = (lib(t), oracle(t));
        if o && !l {
            a.missed += 1;
        } else if l && !o && !oracle(t - tol) && !oracle(t + tol) {
            a.spurious += 1;
        }
    }
    a
}

/// Random interval with a random (possibly zero) width.
pub fn random_interval(rng: &mut CounterRng, span: f64) -> (f64, f64) {
    let lo = rng.uniform(-span, span);
    let w = if rng.next_u64().is_multiple_of(5) {
        0.0
    } else {
        rng.uniform(0.0, span)
    };
    (lo, lo + w)
}

/// Random star-shaped (hence simple) polygon around the origin.
pub fn random_star_polygon(rng: &mut CounterRng, n: usize) -> CurveModel {
    // one vertex per angular sector keeps them well separated
    let vertices = (0..n)
        .map(|k| {
            let t = (k as f64 + 0.5 * rng.next_f64()) * std::f64::consts::TAU / n as f64;
            let r = rng.uniform(0.4, 1.0);
            Point::new(r * t.cos(), r * t.sin())
        })
        .collect();
    CurveModel::new(vertices).expect("star polygons are simple")
}
