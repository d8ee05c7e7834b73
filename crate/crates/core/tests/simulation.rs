use std::sync::Arc;

use curve_formation::circle::rem_scalar;
use curve_formation::engine::{cyclic_pairs, InitialPositions};
use curve_formation::metrics::{self, RunMetrics};
use curve_formation::sensing::NoiseLaw;
use curve_formation::{run, CurveModel, Error, Point, SimConfig, TrajectoryLog, World};

const D: f64 = 0.003;

fn reference(seed: u64) -> SimConfig {
    let mut c = SimConfig::reference(D, 2.0 * D);
    c.seed = seed;
    c
}

fn run_ok(config: &SimConfig) -> TrajectoryLog {
    match run(config) {
        Ok(log) => log,
        Err(e) => panic!("seed {} aborted: {}", config.seed, e.cause),
    }
}

fn assert_clean(log: &TrajectoryLog) {
    let totals = log.audit_totals();
    assert!(totals.is_clean(), "seed {}: {totals:?}", log.meta.seed);
    assert!(totals.tracked > 0);
}

#[test]
fn estimates_always_contain_the_truth() {
    for seed in 1..=4 {
        let log = run_ok(&reference(seed));
        assert_eq!(log.records.len(), 5001);
        assert_clean(&log);
        // every follower ends up locked on its true predecessor
        let last = log.records.last().unwrap();
        for (i, a) in last.agents.iter().enumerate().skip(1) {
            assert_eq!(a.follower, Some(i - 1), "seed {seed}");
        }
        assert_eq!(last.agents[0].follower, None);
    }
}

#[test]
fn runs_are_deterministic() {
    let a = run_ok(&reference(9));
    let b = run_ok(&reference(9));
    assert_eq!(a, b);
    let c = run_ok(&reference(10));
    assert_ne!(a.records[0].positions, c.records[0].positions);
}

#[test]
fn zero_horizon_records_only_the_initial_state() {
    let mut c = reference(3);
    c.horizon = 0;
    let log = run_ok(&c);
    assert_eq!(log.records.len(), 1);
    assert_eq!(log.records[0].step, 0);
    let m = RunMetrics::from_history(&log.spacing_history(), metrics::DEFAULT_WINDOW);
    assert!(m.eps_hat.is_finite());
}

#[test]
fn inputs_take_the_three_control_levels() {
    let c = reference(5);
    let log = run_ok(&c);
    let levels = [0.0, D, D + c.k_gain];
    for rec in &log.records {
        for (i, u) in rec.inputs.iter().enumerate() {
            assert!(levels.contains(u), "step {} agent {i}: input {u}", rec.step);
        }
        // the pacemaker never deviates from the reference speed
        assert_eq!(rec.inputs[c.pacemaker], D);
    }
}

#[test]
fn spacings_evolve_with_the_applied_inputs() {
    let mut c = reference(6);
    c.speed = 0.01;
    let log = run_ok(&c);
    let l = c.curve.length();
    let pairs = cyclic_pairs(c.agents);
    for w in log.records.windows(2) {
        let (now, next) = (&w[0], &w[1]);
        for (p, &(i, j)) in pairs.iter().enumerate() {
            let expected = rem_scalar(now.spacings[p] + now.inputs[i] - now.inputs[j], l).unwrap();
            let diff = rem_scalar(next.spacings[p] - expected, l).unwrap();
            assert!(diff.abs() < 1e-9, "step {} pair {p}: {diff}", now.step);
        }
        // the gaps go once around the curve (a gap beyond l/2 reads negative)
        let sum: f64 = next.spacings.iter().sum();
        assert!(rem_scalar(sum, l).unwrap().abs() < 1e-9);
    }
}

#[test]
fn infeasible_initial_gap_is_reported() {
    let mut c = reference(1);
    c.initial = InitialPositions::Generate { min_gap: 0.7 };
    assert!(matches!(World::new(c.clone()), Err(Error::Config(_))));
    let err = run(&c).unwrap_err();
    assert!(matches!(err.cause, Error::Config(_)));
    assert!(err.log.records.is_empty());
}

#[test]
fn explicit_positions_are_validated() {
    let mut c = reference(1);
    c.initial = InitialPositions::Explicit(vec![0.0, 0.5, 1.0]);
    assert!(World::new(c.clone()).is_err());
    c.initial = InitialPositions::Explicit(vec![0.0, 0.5, 1.0, 1.5, 2.0, 4.0]);
    assert!(World::new(c).is_err());
}

#[test]
fn explicit_positions_converge_to_the_target_spacing() {
    let mut c = reference(2);
    c.initial = InitialPositions::Explicit(vec![0.0, 0.5, 1.2, 1.9, 2.6, 3.3]);
    let log = run_ok(&c);
    assert_clean(&log);
    let m = RunMetrics::from_history(&log.spacing_history(), metrics::DEFAULT_WINDOW);
    assert!(m.k5.is_some());
    assert!(m.eps_hat < 0.25 * c.target(), "{m:?}");
}

#[test]
fn one_reading_per_direction() {
    let mut c = reference(7);
    c.symmetric_measurements = false;
    let log = run_ok(&c);
    assert_clean(&log);
    assert_eq!(log.records[0].measurements.len(), 30);
    // the two directions of a pair are drawn independently
    let differs = log.records.iter().any(|r| {
        let m = &r.measurements;
        m[0].reading != m[5].reading
    });
    assert!(differs);
}

#[test]
fn other_pacemaker_and_noise_law() {
    let mut c = reference(8);
    c.pacemaker = 3;
    c.sensor.noise = NoiseLaw::Extremes;
    let log = run_ok(&c);
    assert_clean(&log);
    assert!(log.records.iter().all(|r| r.inputs[3] == D));
}

#[test]
fn custom_curve_stays_sound() {
    let p = Point::new;
    let rect = CurveModel::new(vec![p(0.0, 0.0), p(1.5, 0.0), p(1.5, 1.0), p(0.0, 1.0)]).unwrap();
    let mut c = reference(4);
    c.curve = Arc::new(rect);
    c.horizon = 1500;
    let log = run_ok(&c);
    assert_clean(&log);
    assert_eq!(log.meta.length, 5.0);
}

#[test]
fn invalid_configs_are_rejected() {
    let mut c = reference(1);
    c.pacemaker = 6;
    assert!(World::new(c).is_err());
    let mut c = reference(1);
    c.k_gain = 0.0;
    assert!(World::new(c).is_err());
    let mut c = reference(1);
    c.sensor.r_sure = 2.0;
    c.sensor.r_max = 2.5;
    assert!(World::new(c).is_err());
}

#[test]
fn stepping_past_the_horizon_fails() {
    let mut c = reference(1);
    c.horizon = 2;
    let mut w = World::new(c).unwrap();
    for _ in 0..3 {
        w.step().unwrap();
    }
    assert!(w.is_finished());
    assert!(matches!(w.step(), Err(Error::Contract(_))));
}
