mod common;

use std::f64::consts::SQRT_2;

use common::random_star_polygon;
use curve_formation::circle::rem_scalar;
use curve_formation::rng::CounterRng;
use curve_formation::{CurveModel, DistanceInterval, Point};

/// Slack for floating-point noise in distances of order one.
const EPS: f64 = 1e-12;

#[test]
fn square_envelope_matches_closed_form() {
    let sq = CurveModel::unit_square();
    let w = sq.cell_width();
    for c in 0..sq.cell_count() {
        let (x0, x1) = sq.cell_bounds(c);
        if x1 > 1.0 {
            break;
        }
        let (dmin, dmax) = sq.envelope_cell(c);
        // dmin(x) = x/√2 at a corner, dmax(x) = x along a side
        assert!((dmin - x0 / SQRT_2).abs() <= 2.0 * (w + w), "cell {c}: dmin {dmin}");
        assert!((dmax - x1).abs() <= 2.0 * (w + w), "cell {c}: dmax {dmax}");
        // and the envelope must bracket every exact value in the cell
        assert!(dmin <= x0 / SQRT_2 + EPS && dmax >= x1 - EPS);
    }
}

#[test]
fn square_inversion_matches_closed_form() {
    let sq = CurveModel::unit_square();
    let w = sq.cell_width();
    let mut rng = CounterRng::new(11);
    for _ in 0..500 {
        let lo = rng.uniform(0.0, 0.6);
        let hi = rng.uniform(lo, 0.69);
        let set = sq.invert_measured(&DistanceInterval::new(lo, hi).unwrap());
        let (a, b) = (lo, SQRT_2 * hi);
        let parts = set.parts();
        let right = parts.last().unwrap();
        // within one cell of [a, b] ∪ [−b, −a], never inside it
        if a > w {
            assert_eq!(parts.len(), 2, "{set}");
            assert!(
                right.lo() <= a + EPS && a - right.lo() <= w + EPS,
                "{set} vs [{a}, {b}]"
            );
        } else {
            assert!(right.lo() <= a + EPS);
        }
        assert!(
            right.hi() >= b - EPS && right.hi() - b <= w + EPS,
            "{set} vs [{a}, {b}]"
        );
        // mirror image
        assert_eq!(parts[0].lo(), -right.hi());
    }
}

#[test]
fn envelope_and_inversion_are_sound_on_random_curves() {
    let mut rng = CounterRng::new(12);
    for _ in 0..20 {
        let n = 3 + (rng.next_u64() % 10) as usize;
        let curve = random_star_polygon(&mut rng, n);
        let l = curve.length();
        let r_sure = 0.5 * curve.max_distance();
        let absent = curve.invert_absent(r_sure);
        for _ in 0..2000 {
            let s1 = rng.uniform(0.0, l);
            let s2 = rng.uniform(0.0, l);
            let x = rem_scalar(s1 - s2, l).unwrap();
            let m = curve.euclidean_distance(s1, s2);
            let (dmin, dmax) = curve.envelope_cell(curve.cell_of(x));
            assert!(
                dmin <= m + EPS && m <= dmax + EPS,
                "x {x}: {m} outside [{dmin}, {dmax}]"
            );
            let pad = rng.uniform(0.0, 0.05);
            let set = curve.invert_measured(&DistanceInterval::new((m - pad).max(0.0), m + pad).unwrap());
            assert!(set.contains(x), "x {x} missing from inversion of {m}");
            let exact = curve.invert_measured(&DistanceInterval::new(m, m).unwrap());
            assert!(exact.contains(x));
            if m > r_sure {
                assert!(absent.contains(x), "x {x} at distance {m} missing from absent set");
            }
        }
    }
}

#[test]
fn distances_follow_the_polyline() {
    let sq = CurveModel::unit_square();
    assert_eq!(sq.length(), 4.0);
    assert_eq!(sq.point_at(1.5), Point::new(1.0, 0.5));
    assert_eq!(sq.point_at(-0.25), Point::new(0.0, 0.25));
    assert!((sq.euclidean_distance(0.5, 1.5) - 0.5 * SQRT_2).abs() < EPS);
    assert!((sq.max_distance() - SQRT_2).abs() <= 2.0 * sq.cell_width());
}

#[test]
fn invalid_curves_are_rejected() {
    let p = Point::new;
    // too few vertices
    assert!(CurveModel::new(vec![p(0.0, 0.0), p(1.0, 0.0)]).is_err());
    // bow tie
    assert!(CurveModel::new(vec![p(0.0, 0.0), p(1.0, 1.0), p(1.0, 0.0), p(0.0, 1.0)]).is_err());
    // repeated vertex
    assert!(CurveModel::new(vec![p(0.0, 0.0), p(1.0, 0.0), p(1.0, 0.0), p(0.0, 1.0)]).is_err());
    assert!(CurveModel::parse("0 0\n1 x\n").is_err());
    let v = CurveModel::parse("# triangle\n0 0\n\n2 0 # base\n0 2\n").unwrap();
    assert_eq!(v.len(), 3);
}
