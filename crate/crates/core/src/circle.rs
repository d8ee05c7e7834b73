//! Modular arithmetic and guaranteed set arithmetic on a circle.
//!
//! Positions on a closed curve of length `l` are represented in the linear
//! coordinates of the canonical domain `[-l/2, l/2)`. Sets of positions are
//! finite unions of closed intervals ([`MultiInterval`]). Every operation
//! returns a superset of the exact pointwise result, never a subset, so that
//! an estimate built from them keeps containing the true value.

use std::fmt;

use crate::error::{Error, Result};

/// Relative tolerance (times the circumference) below which two endpoints are
/// considered equal during canonicalization.
pub const MERGE_TOLERANCE: f64 = 1e-12;

/// Remainder of `z` modulo `m`, in `[0, |m|)`.
pub fn mod_scalar(z: f64, m: f64) -> Result<f64> {
    if m == 0.0 || !m.is_finite() {
        return Err(Error::Domain(format!("modulus must be finite and nonzero, got {m}")));
    }
    if !z.is_finite() {
        return Err(Error::Domain(format!("argument must be finite, got {z}")));
    }
    Ok(wrap_mod(z, m.abs()))
}

/// Signed remainder `mod(z - m/2, m) - m/2`, in `[-|m|/2, |m|/2)`.
pub fn rem_scalar(z: f64, m: f64) -> Result<f64> {
    if m == 0.0 || !m.is_finite() {
        return Err(Error::Domain(format!("modulus must be finite and nonzero, got {m}")));
    }
    if !z.is_finite() {
        return Err(Error::Domain(format!("argument must be finite, got {z}")));
    }
    Ok(wrap_rem(z, m.abs()))
}

/// `mod_scalar` for a known positive modulus.
#[inline]
pub(crate) fn wrap_mod(z: f64, m: f64) -> f64 {
    let c = z.rem_euclid(m);
    // rem_euclid may round up to m for tiny negative inputs.
    if c >= m {
        0.0
    } else {
        c
    }
}

/// `rem_scalar` for a known positive modulus.
///
/// `z % m` is exact, and the single correction below subtracts numbers within
/// a factor of two of each other, so the result is exactly `z - q*m`.
#[inline]
pub(crate) fn wrap_rem(z: f64, m: f64) -> f64 {
    let half = 0.5 * m;
    let r = z % m;
    if r >= half {
        r - m
    } else if r < -half {
        r + m
    } else {
        r
    }
}

/// Closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

/// Interval hull of a family of intervals.
pub type Hull = Interval;

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) {
            return Err(Error::Domain(format!("non-finite interval [{lo}, {hi}]")));
        }
        if lo > hi {
            return Err(Error::Domain(format!("inverted interval [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }

    pub fn point(x: f64) -> Self {
        Self { lo: x, hi: x }
    }

    /// Caller guarantees `lo <= hi`.
    pub(crate) fn new_unchecked(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi, "inverted interval [{lo}, {hi}]");
        Self { lo, hi }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    /// Closed-set overlap test: touching intervals intersect.
    pub fn intersects(&self, other: &Interval) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    pub fn intersection(&self, other: &Interval) -> Option<Interval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo <= hi).then_some(Interval { lo, hi })
    }

    /// `{x + y | x in self, y in other}`.
    pub fn minkowski_sum(&self, other: &Interval) -> Interval {
        Interval {
            lo: add_down(self.lo, other.lo),
            hi: add_up(self.hi, other.hi),
        }
    }

    /// `{x - y | x in self, y in other}`.
    pub fn minkowski_difference(&self, other: &Interval) -> Interval {
        Interval {
            lo: add_down(self.lo, -other.hi),
            hi: add_up(self.hi, -other.lo),
        }
    }

    pub fn inflate(&self, pad: f64) -> Interval {
        Interval::new_unchecked(add_down(self.lo, -pad), add_up(self.hi, pad))
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

pub fn minkowski_sum(x: &Interval, y: &Interval) -> Interval {
    x.minkowski_sum(y)
}

/// Interval hull of a list of intervals.
pub fn hull(parts: &[Interval]) -> Result<Hull> {
    let first = parts.first().ok_or(Error::EmptySet)?;
    Ok(parts.iter().skip(1).fold(*first, |h, p| Interval {
        lo: h.lo.min(p.lo),
        hi: h.hi.max(p.hi),
    }))
}

/// Finite union of disjoint closed intervals on a circle of circumference `l`,
/// stored sorted in the canonical domain `[-l/2, l/2]`.
///
/// The points `-l/2` and `l/2` are the same point of the circle. Whenever a
/// set touches one of them the canonical form also lists the other, so that
/// linear-coordinate operations agree with the circular set semantics.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiInterval {
    circumference: f64,
    parts: Vec<Interval>,
}

impl MultiInterval {
    pub fn empty(circumference: f64) -> Self {
        Self {
            circumference,
            parts: Vec::new(),
        }
    }

    pub fn full(circumference: f64) -> Self {
        let half = 0.5 * circumference;
        Self {
            circumference,
            parts: vec![Interval::new_unchecked(-half, half)],
        }
    }

    /// Builds the set covered by `parts`, which may lie anywhere on the real
    /// line; each part is reduced modulo the circumference.
    pub fn from_parts(circumference: f64, parts: impl IntoIterator<Item = Interval>) -> Result<Self> {
        if !(circumference > 0.0 && circumference.is_finite()) {
            return Err(Error::Domain(format!(
                "circumference must be positive, got {circumference}"
            )));
        }
        let mut out = Vec::new();
        for p in parts {
            if wrap_into(&mut out, p.lo, p.hi, circumference) {
                return Ok(Self::full(circumference));
            }
        }
        Ok(Self::canonical(circumference, out))
    }

    /// Canonicalizes parts already inside `[-l/2, l/2]`.
    pub(crate) fn canonical(circumference: f64, mut parts: Vec<Interval>) -> Self {
        let half = 0.5 * circumference;
        let tol = MERGE_TOLERANCE * circumference;
        parts.sort_by(|a, b| a.lo.total_cmp(&b.lo));

        let mut merged: Vec<Interval> = Vec::with_capacity(parts.len() + 1);
        for p in parts {
            let p = Interval::new_unchecked(p.lo.max(-half), p.hi.min(half));
            match merged.last_mut() {
                Some(last) if p.lo <= last.hi + tol => last.hi = last.hi.max(p.hi),
                _ => merged.push(p),
            }
        }

        if let Some(first) = merged.first_mut() {
            if first.lo <= -half + tol {
                first.lo = -half;
            }
        }
        if let Some(last) = merged.last_mut() {
            if last.hi >= half - tol {
                last.hi = half;
            }
        }
        let touches_low = merged.first().is_some_and(|p| p.lo == -half);
        let touches_high = merged.last().is_some_and(|p| p.hi == half);
        if touches_low && !touches_high {
            merged.push(Interval::point(half));
        } else if touches_high && !touches_low {
            merged.insert(0, Interval::point(-half));
        }

        Self {
            circumference,
            parts: merged,
        }
    }

    pub fn circumference(&self) -> f64 {
        self.circumference
    }

    pub fn parts(&self) -> &[Interval] {
        &self.parts
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    /// Hull in the linear coordinates of the canonical domain.
    pub fn hull(&self) -> Result<Hull> {
        hull(&self.parts)
    }

    /// Total length of the set.
    pub fn measure(&self) -> f64 {
        self.parts.iter().map(Interval::width).sum()
    }

    /// Closed-endpoint membership of `x`, reduced modulo the circumference.
    pub fn contains(&self, x: f64) -> bool {
        let x = wrap_rem(x, self.circumference);
        // parts are sorted; the first part with hi >= x decides.
        let idx = self.parts.partition_point(|p| p.hi < x);
        self.parts.get(idx).is_some_and(|p| p.lo <= x)
    }

    /// Image of `{x + u | x in self, u in shift}` under `rem(., l)`.
    pub fn rem_shift(&self, shift: &Interval) -> MultiInterval {
        let l = self.circumference;
        let mut out = Vec::with_capacity(self.parts.len() + 2);
        for p in &self.parts {
            let s = p.minkowski_sum(shift);
            if wrap_into(&mut out, s.lo, s.hi, l) {
                return Self::full(l);
            }
        }
        Self::canonical(l, out)
    }

    /// Pointwise intersection.
    pub fn intersect(&self, other: &MultiInterval) -> Result<MultiInterval> {
        if self.circumference != other.circumference {
            return Err(Error::CircumferenceMismatch(self.circumference, other.circumference));
        }
        let (a, b) = (&self.parts, &other.parts);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            if let Some(x) = a[i].intersection(&b[j]) {
                out.push(x);
            }
            if a[i].hi < b[j].hi {
                i += 1;
            } else {
                j += 1;
            }
        }
        Ok(Self::canonical(self.circumference, out))
    }

    /// `M ∪ -M`.
    pub fn symmetrized(&self) -> MultiInterval {
        let mut parts = self.parts.clone();
        parts.extend(self.parts.iter().map(|p| Interval::new_unchecked(-p.hi, -p.lo)));
        Self::canonical(self.circumference, parts)
    }
}

impl fmt::Display for MultiInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.parts.is_empty() {
            return write!(f, "∅");
        }
        for (n, p) in self.parts.iter().enumerate() {
            if n > 0 {
                write!(f, " ∪ ")?;
            }
            write!(f, "{p}")?;
        }
        Ok(())
    }
}

/// Image of `[lo, hi]` under `rem(., l)`, appended as one or two parts.
/// Returns true when the interval covers the whole circle.
/// Error-free transformation: `a + b == s + err` exactly.
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bp = s - a;
    let ap = s - bp;
    (s, (a - ap) + (b - bp))
}

/// `a + b` rounded toward negative infinity.
pub(crate) fn add_down(a: f64, b: f64) -> f64 {
    let (s, err) = two_sum(a, b);
    if err < 0.0 {
        s.next_down()
    } else {
        s
    }
}

/// `a + b` rounded toward positive infinity.
pub(crate) fn add_up(a: f64, b: f64) -> f64 {
    let (s, err) = two_sum(a, b);
    if err > 0.0 {
        s.next_up()
    } else {
        s
    }
}

fn sub_up(a: f64, b: f64) -> f64 {
    add_up(a, -b)
}

fn wrap_into(out: &mut Vec<Interval>, lo: f64, hi: f64, l: f64) -> bool {
    let width = hi - lo;
    if width >= l * (1.0 - MERGE_TOLERANCE) {
        return true;
    }
    let half = 0.5 * l;
    let start = wrap_rem(lo, l);
    // Shifting `hi` by the same number of turns may round; round outward so
    // the wrapped part still covers the original one.
    let end = if start == lo { hi } else { add_up(start, sub_up(hi, lo)) };
    if end <= half {
        out.push(Interval::new_unchecked(start, end.max(start)));
    } else {
        out.push(Interval::new_unchecked(start, half));
        out.push(Interval::new_unchecked(-half, (end - l).max(-half)));
    }
    false
}

pub fn rem_multiinterval(m: &MultiInterval, shift: &Interval) -> MultiInterval {
    m.rem_shift(shift)
}

pub fn intersect(a: &MultiInterval, b: &MultiInterval) -> Result<MultiInterval> {
    a.intersect(b)
}
