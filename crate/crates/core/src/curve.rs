//! Closed polylines parametrized by arclength, and the inversion of distance
//! information into sets of relative arc positions.
//!
//! The inversion relies on a distance envelope: for every cell `[x0, x1]` of
//! arc separations in `[0, l/2]`, `dmin` and `dmax` bound the Euclidean
//! distance `|γ(a) − γ(a + x)|` over all base points `a` and all `x` in the
//! cell. On a polyline the chord `γ(a) − γ(a + x)` is affine in `(a, x)` over
//! each pair of segments, so both bounds are computed exactly from the
//! vertices of small convex polygons in the `(a, x)` plane.

use std::fmt;
use std::path::Path;

use rayon::prelude::*;

use crate::circle::{wrap_mod, Interval, MultiInterval};
use crate::error::{Error, Result};

/// Default number of envelope cells per curve length (cell width `l/4000`).
pub const DEFAULT_CELLS_PER_LENGTH: f64 = 4000.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        let (dx, dy) = (self.x - other.x, self.y - other.y);
        (dx * dx + dy * dy).sqrt()
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Closed range of Euclidean distances `[lo, hi]` with `0 <= lo <= hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceInterval {
    lo: f64,
    hi: f64,
}

impl DistanceInterval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || lo < 0.0 || lo > hi {
            return Err(Error::Domain(format!("invalid distance interval [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn contains(&self, m: f64) -> bool {
        self.lo <= m && m <= self.hi
    }
}

#[derive(Debug, Clone)]
struct Envelope {
    cell_width: f64,
    dmin: Vec<f64>,
    dmax: Vec<f64>,
    /// `suffix_min_dmin[c] = min(dmin[c..])`, lets inversion stop early.
    suffix_min_dmin: Vec<f64>,
}

/// A simple closed polyline with its distance envelope.
#[derive(Debug, Clone)]
pub struct CurveModel {
    vertices: Vec<Point>,
    /// `cumulative[k]` is the arclength at vertex `k`; the last entry is `l`.
    cumulative: Vec<f64>,
    length: f64,
    envelope: Envelope,
}

impl CurveModel {
    /// Polyline with the default envelope resolution `l/4000`.
    pub fn new(vertices: Vec<Point>) -> Result<Self> {
        let length = validate_polyline(&vertices)?;
        Self::with_resolution(vertices, length / DEFAULT_CELLS_PER_LENGTH)
    }

    pub fn with_resolution(vertices: Vec<Point>, cell_width: f64) -> Result<Self> {
        let length = validate_polyline(&vertices)?;
        if !(cell_width > 0.0 && cell_width.is_finite()) {
            return Err(Error::Config(format!(
                "envelope resolution must be positive, got {cell_width}"
            )));
        }
        if cell_width > length / 200.0 {
            return Err(Error::Config(format!(
                "envelope resolution {cell_width} is coarser than l/200 = {}",
                length / 200.0
            )));
        }
        check_simple(&vertices)?;

        let mut cumulative = Vec::with_capacity(vertices.len() + 1);
        cumulative.push(0.0);
        let mut acc = 0.0;
        for k in 0..vertices.len() {
            acc += vertices[k].distance(&vertices[(k + 1) % vertices.len()]);
            cumulative.push(acc);
        }

        let mut curve = CurveModel {
            vertices,
            cumulative,
            length,
            envelope: Envelope {
                cell_width,
                dmin: Vec::new(),
                dmax: Vec::new(),
                suffix_min_dmin: Vec::new(),
            },
        };
        curve.build_envelope();
        Ok(curve)
    }

    /// Unit square `(0,0), (1,0), (1,1), (0,1)`, counterclockwise, `l = 4`.
    pub fn unit_square() -> Self {
        Self::new(vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(0.0, 1.0),
        ])
        .expect("unit square is a valid curve")
    }

    /// Parses one `x y` vertex per line. Blank lines and `#` comments are
    /// ignored; the polyline is implicitly closed.
    pub fn parse(text: &str) -> Result<Vec<Point>> {
        let mut vertices = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let [x, y] = fields.as_slice() else {
                return Err(Error::Parse(format!(
                    "line {}: expected two numbers, got {:?}",
                    n + 1,
                    line
                )));
            };
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|e| Error::Parse(format!("line {}: {s:?}: {e}", n + 1)))
            };
            vertices.push(Point::new(parse(x)?, parse(y)?));
        }
        Ok(vertices)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::new(Self::parse(&text)?)
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn cell_width(&self) -> f64 {
        self.envelope.cell_width
    }

    pub fn cell_count(&self) -> usize {
        self.envelope.dmin.len()
    }

    /// Arc separations covered by envelope cell `c`.
    pub fn cell_bounds(&self, c: usize) -> (f64, f64) {
        let half = 0.5 * self.length;
        let w = self.envelope.cell_width;
        let x0 = (c as f64 * w).min(half);
        let x1 = ((c + 1) as f64 * w).min(half);
        (x0, x1)
    }

    /// Index of the envelope cell containing separation `|x|`.
    pub fn cell_of(&self, x: f64) -> usize {
        let x = x.abs().min(0.5 * self.length);
        ((x / self.envelope.cell_width) as usize).min(self.cell_count() - 1)
    }

    /// `(dmin, dmax)` of cell `c`.
    pub fn envelope_cell(&self, c: usize) -> (f64, f64) {
        (self.envelope.dmin[c], self.envelope.dmax[c])
    }

    /// Point at arclength `mod(s, l)`.
    pub fn point_at(&self, s: f64) -> Point {
        let s = wrap_mod(s, self.length);
        let seg = self.segment_at(s);
        self.segment_point(seg, s - self.cumulative[seg])
    }

    /// Euclidean distance between the points at arclengths `s1` and `s2`.
    pub fn euclidean_distance(&self, s1: f64, s2: f64) -> f64 {
        self.point_at(s1).distance(&self.point_at(s2))
    }

    /// Relative positions `x` in `[-l/2, l/2]` whose envelope is compatible
    /// with a distance in `m`.
    pub fn invert_measured(&self, m: &DistanceInterval) -> MultiInterval {
        let env = &self.envelope;
        let mut parts: Vec<Interval> = Vec::new();
        for c in 0..env.dmin.len() {
            if env.suffix_min_dmin[c] > m.hi() {
                break;
            }
            if env.dmin[c] <= m.hi() && env.dmax[c] >= m.lo() {
                self.push_cell(&mut parts, c);
            }
        }
        MultiInterval::canonical(self.length, parts).symmetrized()
    }

    /// Relative positions `x` at which the distance may exceed `r_sure`
    /// (closure of `{x : dmax(|x|) > r_sure}`).
    pub fn invert_absent(&self, r_sure: f64) -> MultiInterval {
        let mut parts: Vec<Interval> = Vec::new();
        for (c, &dmax) in self.envelope.dmax.iter().enumerate() {
            if dmax > r_sure {
                self.push_cell(&mut parts, c);
            }
        }
        MultiInterval::canonical(self.length, parts).symmetrized()
    }

    /// Largest distance between any two points of the curve (within envelope
    /// accuracy).
    pub fn max_distance(&self) -> f64 {
        self.envelope.dmax.iter().copied().fold(0.0, f64::max)
    }

    fn push_cell(&self, parts: &mut Vec<Interval>, c: usize) {
        let (x0, x1) = self.cell_bounds(c);
        match parts.last_mut() {
            Some(last) if last.hi() >= x0 => *last = Interval::new_unchecked(last.lo(), x1),
            _ => parts.push(Interval::new_unchecked(x0, x1)),
        }
    }

    fn segment_at(&self, s: f64) -> usize {
        let n = self.vertices.len();
        self.cumulative
            .partition_point(|&c| c <= s)
            .saturating_sub(1)
            .min(n - 1)
    }

    fn segment_len(&self, seg: usize) -> f64 {
        self.cumulative[seg + 1] - self.cumulative[seg]
    }

    /// Point at local arclength `t` along segment `seg`, extrapolating linearly.
    fn segment_point(&self, seg: usize, t: f64) -> Point {
        let a = self.vertices[seg];
        let b = self.vertices[(seg + 1) % self.vertices.len()];
        let f = t / self.segment_len(seg);
        Point::new(a.x + f * (b.x - a.x), a.y + f * (b.y - a.y))
    }

    fn build_envelope(&mut self) {
        let half = 0.5 * self.length;
        let w = self.envelope.cell_width;
        let cells = (half / w).ceil().max(1.0) as usize;
        let pad = 1e-12 * self.length;

        let bounds: Vec<(f64, f64)> = (0..cells)
            .into_par_iter()
            .map(|c| {
                let (x0, x1) = self.cell_bounds(c);
                let (lo, hi) = self.cell_distance_bounds(x0, x1);
                ((lo - pad).max(0.0), hi + pad)
            })
            .collect();

        let dmin: Vec<f64> = bounds.iter().map(|b| b.0).collect();
        let dmax: Vec<f64> = bounds.iter().map(|b| b.1).collect();
        let mut suffix = dmin.clone();
        for c in (0..cells.saturating_sub(1)).rev() {
            suffix[c] = suffix[c].min(suffix[c + 1]);
        }
        self.envelope.dmin = dmin;
        self.envelope.dmax = dmax;
        self.envelope.suffix_min_dmin = suffix;
    }

    /// Exact min and max of `|γ(a) − γ(a + x)|` over all `a` and `x ∈ [x0, x1]`.
    fn cell_distance_bounds(&self, x0: f64, x1: f64) -> (f64, f64) {
        let n = self.vertices.len();
        let l = self.length;
        let mut dmin = f64::INFINITY;
        let mut dmax: f64 = 0.0;

        for p in 0..n {
            let (a0, a1) = (self.cumulative[p], self.cumulative[p + 1]);
            for wrap in 0..2 {
                let offset = wrap as f64 * l;
                let (s_lo, s_hi) = (a0 + x0 - offset, a1 + x1 - offset);
                if s_hi < 0.0 || s_lo > l {
                    continue;
                }
                let first = self.segment_at(s_lo.max(0.0));
                for q in first..n {
                    let (b0, b1) = (self.cumulative[q], self.cumulative[q + 1]);
                    if b0 > s_hi {
                        break;
                    }
                    let poly = clip_region(a0, a1, x0, x1, b0 + offset, b1 + offset);
                    if poly.is_empty() {
                        continue;
                    }
                    let chords: Vec<Point> = poly
                        .iter()
                        .map(|&(a, x)| {
                            let u = self.segment_point(p, a - a0);
                            let v = self.segment_point(q, a + x - b0 - offset);
                            Point::new(u.x - v.x, u.y - v.y)
                        })
                        .collect();
                    for c in &chords {
                        dmax = dmax.max((c.x * c.x + c.y * c.y).sqrt());
                    }
                    dmin = dmin.min(origin_to_hull(&chords));
                }
            }
        }
        (dmin, dmax)
    }
}

/// Validates vertex count and finiteness; returns the perimeter.
fn validate_polyline(vertices: &[Point]) -> Result<f64> {
    if vertices.len() < 3 {
        return Err(Error::Curve(format!(
            "a closed curve needs at least 3 vertices, got {}",
            vertices.len()
        )));
    }
    if let Some(v) = vertices.iter().find(|v| !(v.x.is_finite() && v.y.is_finite())) {
        return Err(Error::Curve(format!("non-finite vertex {v}")));
    }
    let n = vertices.len();
    let mut length = 0.0;
    for k in 0..n {
        let seg = vertices[k].distance(&vertices[(k + 1) % n]);
        if seg == 0.0 {
            return Err(Error::Curve(format!("repeated vertex {}", vertices[k])));
        }
        length += seg;
    }
    Ok(length)
}

fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

fn on_segment(p: Point, a: Point, b: Point) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

fn segments_intersect(a: Point, b: Point, c: Point, d: Point) -> bool {
    let d1 = cross(c, d, a);
    let d2 = cross(c, d, b);
    let d3 = cross(a, b, c);
    let d4 = cross(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    (d1 == 0.0 && on_segment(a, c, d))
        || (d2 == 0.0 && on_segment(b, c, d))
        || (d3 == 0.0 && on_segment(c, a, b))
        || (d4 == 0.0 && on_segment(d, a, b))
}

/// Rejects self-intersecting polylines (the Jordan property).
fn check_simple(vertices: &[Point]) -> Result<()> {
    let n = vertices.len();
    let seg = |k: usize| (vertices[k], vertices[(k + 1) % n]);
    for i in 0..n {
        let (a, b) = seg(i);
        // Consecutive segments share a vertex; they may only meet there.
        let (_, c) = seg((i + 1) % n);
        if cross(a, b, c) == 0.0 && ((c.x - b.x) * (a.x - b.x) + (c.y - b.y) * (a.y - b.y)) > 0.0 {
            return Err(Error::Curve(format!("segments {i} and {} fold back", (i + 1) % n)));
        }
        for j in (i + 2)..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            let (c, d) = seg(j);
            if segments_intersect(a, b, c, d) {
                return Err(Error::Curve(format!("segments {i} and {j} intersect")));
            }
        }
    }
    Ok(())
}

/// Vertices of `{(a, x) : a0 <= a <= a1, x0 <= x <= x1, s0 <= a + x <= s1}`.
fn clip_region(a0: f64, a1: f64, x0: f64, x1: f64, s0: f64, s1: f64) -> Vec<(f64, f64)> {
    let mut poly = vec![(a0, x0), (a1, x0), (a1, x1), (a0, x1)];
    // keep a + x >= s0, then a + x <= s1
    for (sign, bound) in [(1.0, s0), (-1.0, -s1)] {
        let inside = |v: (f64, f64)| sign * (v.0 + v.1) >= bound;
        let mut out = Vec::with_capacity(poly.len() + 2);
        for k in 0..poly.len() {
            let cur = poly[k];
            let next = poly[(k + 1) % poly.len()];
            let (ci, ni) = (inside(cur), inside(next));
            if ci {
                out.push(cur);
            }
            if ci != ni {
                let fc = sign * (cur.0 + cur.1) - bound;
                let fnx = sign * (next.0 + next.1) - bound;
                let t = fc / (fc - fnx);
                out.push((cur.0 + t * (next.0 - cur.0), cur.1 + t * (next.1 - cur.1)));
            }
        }
        poly = out;
        if poly.is_empty() {
            break;
        }
    }
    poly
}

/// Distance from the origin to the convex hull of `pts`.
fn origin_to_hull(pts: &[Point]) -> f64 {
    let o = Point::new(0.0, 0.0);
    let n = pts.len();
    for i in 0..n {
        for j in (i + 1)..n {
            for k in (j + 1)..n {
                let c1 = cross(pts[i], pts[j], o);
                let c2 = cross(pts[j], pts[k], o);
                let c3 = cross(pts[k], pts[i], o);
                let area = cross(pts[i], pts[j], pts[k]);
                if area != 0.0 && ((c1 >= 0.0 && c2 >= 0.0 && c3 >= 0.0) || (c1 <= 0.0 && c2 <= 0.0 && c3 <= 0.0)) {
                    return 0.0;
                }
            }
        }
    }
    let mut best = f64::INFINITY;
    for i in 0..n {
        for j in i..n {
            best = best.min(origin_to_segment(pts[i], pts[j]));
        }
    }
    best
}

fn origin_to_segment(a: Point, b: Point) -> f64 {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (-(a.x * dx + a.y * dy) / len2).clamp(0.0, 1.0)
    };
    let (px, py) = (a.x + t * dx, a.y + t * dy);
    (px * px + py * py).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    const SQRT2: f64 = std::f64::consts::SQRT_2;

    fn approx(a: Point, b: Point) -> bool {
        (a.x - b.x).abs() < 1e-12 && (a.y - b.y).abs() < 1e-12
    }

    #[test]
    fn point_at_examples() {
        let sq = CurveModel::unit_square();
        assert_eq!(sq.length(), 4.0);
        assert!(approx(sq.point_at(0.0), Point::new(0.0, 0.0)));
        assert!(approx(sq.point_at(1.5), Point::new(1.0, 0.5)));
        assert!(approx(sq.point_at(4.5), Point::new(0.5, 0.0)));
        assert!(approx(sq.point_at(-0.5), Point::new(0.0, 0.5)));
    }

    #[test]
    fn distance_examples() {
        let sq = CurveModel::unit_square();
        assert!((sq.euclidean_distance(0.5, 1.5) - 0.5f64.sqrt()).abs() < 1e-12);
        assert!((sq.euclidean_distance(0.2, 0.5) - 0.3).abs() < 1e-12);
        assert_eq!(sq.euclidean_distance(2.7, 2.7), 0.0);
    }

    #[test]
    fn envelope_at_zero_is_zero() {
        let sq = CurveModel::unit_square();
        let (lo, _) = sq.envelope_cell(0);
        assert_eq!(lo, 0.0);
        let (x0, x1) = sq.cell_bounds(0);
        assert_eq!(x0, 0.0);
        assert!((x1 - 0.001).abs() < 1e-15);
    }

    #[test]
    fn envelope_at_half_and_opposite() {
        let sq = CurveModel::unit_square();
        let tol = 2.0 * sq.cell_width();
        let (lo, hi) = sq.envelope_cell(sq.cell_of(0.5));
        assert!((hi - 0.5).abs() <= tol, "dmax {hi}");
        assert!((lo - 0.5 / SQRT2).abs() <= tol, "dmin {lo}");
        let (lo, hi) = sq.envelope_cell(sq.cell_count() - 1);
        assert!((lo - 1.0).abs() <= tol, "dmin {lo}");
        assert!((hi - SQRT2).abs() <= tol, "dmax {hi}");
    }

    #[test]
    fn absent_inversion_on_square() {
        let sq = CurveModel::unit_square();
        let ups = sq.invert_absent(0.32);
        let parts = ups.parts();
        assert_eq!(parts.len(), 2, "{ups}");
        assert_eq!(parts[0].lo(), -2.0);
        assert_eq!(parts[1].hi(), 2.0);
        let tol = sq.cell_width() + 1e-12;
        assert!(parts[1].lo() <= 0.32 && 0.32 - parts[1].lo() <= tol);
        assert_eq!(parts[0].hi(), -parts[1].lo());
    }

    #[test]
    fn absent_inversion_limits() {
        let sq = CurveModel::unit_square();
        // closure of the whole circle minus zero
        let ups = sq.invert_absent(1e-9);
        assert_eq!(ups.measure(), 4.0);
        // no chord of the unit square exceeds √2
        let ups = sq.invert_absent(1.5);
        assert!(ups.is_empty());
    }

    #[test]
    fn measured_inversion_at_zero_distance() {
        let sq = CurveModel::unit_square();
        let ups = sq.invert_measured(&DistanceInterval::new(0.0, 0.0).unwrap());
        assert!(ups.contains(0.0));
        assert!(ups.measure() <= 2.0 * sq.cell_width() + 1e-12, "{ups}");
    }

    #[test]
    fn measured_inversion_matches_closed_form() {
        let sq = CurveModel::unit_square();
        let m = DistanceInterval::new(0.19, 0.21).unwrap();
        let ups = sq.invert_measured(&m);
        let parts = ups.parts();
        assert_eq!(parts.len(), 2, "{ups}");
        let w = sq.cell_width();
        assert!(parts[1].lo() <= 0.19 && parts[1].lo() >= 0.19 - w);
        assert!(parts[1].hi() >= 0.21 * SQRT2 && parts[1].hi() <= 0.21 * SQRT2 + w);
        assert_eq!(parts[0].lo(), -parts[1].hi());
        assert_eq!(parts[0].hi(), -parts[1].lo());
    }

    #[test]
    fn rejects_bad_curves() {
        assert!(matches!(
            CurveModel::new(vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0)]),
            Err(Error::Curve(_))
        ));
        // bow tie
        let bow = vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(1.0, 0.0),
            Point::new(0.0, 1.0),
        ];
        assert!(matches!(CurveModel::new(bow), Err(Error::Curve(_))));
        let dup = vec![
            Point::new(0.0, 0.0),
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(0.0, 1.0),
        ];
        assert!(matches!(CurveModel::new(dup), Err(Error::Curve(_))));
        let fold = vec![Point::new(0.0, 0.0), Point::new(2.0, 0.0), Point::new(1.0, 0.0)];
        assert!(matches!(CurveModel::new(fold), Err(Error::Curve(_))));
    }

    #[test]
    fn rejects_coarse_resolution() {
        let sq = CurveModel::unit_square();
        let r = CurveModel::with_resolution(sq.vertices().to_vec(), 0.1);
        assert!(matches!(r, Err(Error::Config(_))));
        let r = CurveModel::with_resolution(sq.vertices().to_vec(), 0.0);
        assert!(matches!(r, Err(Error::Config(_))));
    }

    #[test]
    fn parses_vertex_file() {
        let text = "# square\n0 0\n1 0\n\n1 1  # corner\n0 1\n";
        let v = CurveModel::parse(text).unwrap();
        assert_eq!(v.len(), 4);
        assert_eq!(v[2], Point::new(1.0, 1.0));
        assert!(matches!(CurveModel::parse("0 0 0\n"), Err(Error::Parse(_))));
        assert!(matches!(CurveModel::parse("0 x\n"), Err(Error::Parse(_))));
    }

    #[test]
    fn clip_region_cuts_diagonal() {
        let poly = clip_region(0.0, 1.0, 0.0, 1.0, 0.5, 10.0);
        assert_eq!(poly.len(), 5);
        assert!(clip_region(0.0, 1.0, 0.0, 1.0, 3.0, 4.0).is_empty());
    }

    #[test]
    fn origin_hull_distance() {
        let tri = [Point::new(-1.0, -1.0), Point::new(1.0, -1.0), Point::new(0.0, 1.0)];
        assert_eq!(origin_to_hull(&tri), 0.0);
        let seg = [Point::new(1.0, -1.0), Point::new(1.0, 1.0)];
        assert_eq!(origin_to_hull(&seg), 1.0);
        assert_eq!(origin_to_hull(&[Point::new(3.0, 4.0)]), 5.0);
    }
}
