use std::ffi::{c_char, CString};
use std::ptr;

use curve_formation_ffi::*;

fn last_error() -> String {
    unsafe {
        let n = cf_last_error_message(ptr::null_mut(), 0);
        let mut buf = vec![0 as c_char; n + 1];
        cf_last_error_message(buf.as_mut_ptr(), buf.len());
        std::ffi::CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

fn short_reference(seed: u64, horizon: u64) -> *mut CfConfig {
    let mut config = ptr::null_mut();
    unsafe {
        assert_eq!(cf_config_reference(0.003, 0.006, seed, &mut config), CfStatus::Ok);
        assert_eq!(cf_config_set_horizon(config, horizon), CfStatus::Ok);
    }
    config
}

#[test]
fn square_curve_queries() {
    unsafe {
        let mut curve = ptr::null_mut();
        assert_eq!(cf_curve_unit_square(&mut curve), CfStatus::Ok);
        let mut l = 0.0;
        assert_eq!(cf_curve_length(curve, &mut l), CfStatus::Ok);
        assert_eq!(l, 4.0);
        let mut m = 0.0;
        assert_eq!(cf_curve_distance(curve, 0.5, 1.5, &mut m), CfStatus::Ok);
        assert!((m - 0.5f64.sqrt()).abs() < 1e-12);
        cf_curve_free(curve);
    }
}

#[test]
fn invalid_curve_sets_message() {
    unsafe {
        let xy = [0.0, 0.0, 1.0, 0.0];
        let mut curve = ptr::null_mut();
        let s = cf_curve_from_vertices(xy.as_ptr(), 2, &mut curve);
        assert_eq!(s, CfStatus::Config);
        assert!(curve.is_null());
        assert!(!last_error().is_empty());
    }
}

#[test]
fn run_and_query_metrics() {
    unsafe {
        let config = short_reference(4, 1500);
        let mut log = ptr::null_mut();
        assert_eq!(cf_run(config, &mut log), CfStatus::Ok);

        let (mut steps, mut n) = (0, 0);
        assert_eq!(cf_log_steps(log, &mut steps), CfStatus::Ok);
        assert_eq!(cf_log_agents(log, &mut n), CfStatus::Ok);
        assert_eq!((steps, n), (1501, 6));

        let mut x = vec![0.0; n];
        assert_eq!(cf_log_spacings(log, steps - 1, x.as_mut_ptr(), n), CfStatus::Ok);
        let total: f64 = x.iter().sum();
        assert!((total - 4.0).abs() < 1e-9, "spacings sum to {total}");
        assert_eq!(cf_log_spacings(log, steps, x.as_mut_ptr(), n), CfStatus::OutOfRange);
        assert_eq!(cf_log_spacings(log, 0, x.as_mut_ptr(), 2), CfStatus::InvalidArgument);

        let mut m = CfMetrics::default();
        assert_eq!(cf_log_metrics(log, 200, &mut m), CfStatus::Ok);
        assert_eq!(m.settled, 1);
        assert!(m.eps_hat >= 0.0 && (m.eps_over_b - m.eps_hat * 1.5).abs() < 1e-12);

        let mut k = 0;
        assert_eq!(cf_log_pair_settling(log, 5, &mut k), CfStatus::Ok);
        assert!(k <= m.k5);

        let mut audit = CfAudit::default();
        assert_eq!(cf_log_audit(log, &mut audit), CfStatus::Ok);
        assert!(audit.tracked > 0);
        assert_eq!(audit.estimate_misses, 0);
        assert_eq!(audit.input_misses, 0);

        cf_log_free(log);
        cf_config_free(config);
    }
}

#[test]
fn same_seed_same_csv() {
    let dir = tempfile::tempdir().unwrap();
    let paths: Vec<CString> = (0..2)
        .map(|i| CString::new(dir.path().join(format!("t{i}.csv")).to_str().unwrap()).unwrap())
        .collect();
    for p in &paths {
        unsafe {
            let config = short_reference(9, 300);
            let mut log = ptr::null_mut();
            assert_eq!(cf_run(config, &mut log), CfStatus::Ok);
            assert_eq!(cf_log_write_csv(log, p.as_ptr()), CfStatus::Ok);
            cf_log_free(log);
            cf_config_free(config);
        }
    }
    let a = std::fs::read(dir.path().join("t0.csv")).unwrap();
    let b = std::fs::read(dir.path().join("t1.csv")).unwrap();
    assert!(!a.is_empty());
    assert_eq!(a, b);
}

#[test]
fn custom_config_and_errors() {
    unsafe {
        let mut curve = ptr::null_mut();
        assert_eq!(cf_curve_unit_square(&mut curve), CfStatus::Ok);
        let mut params = CfSimParams {
            agents: 4,
            pacemaker: 0,
            speed: 0.0,
            d: 0.003,
            k_gain: 0.003,
            r_sure: 0.32,
            r_max: 0.35,
            q_bar: 0.5,
            phi: 0.006,
            horizon: 50,
            seed: 1,
            min_gap: 0.1,
        };
        let mut config = ptr::null_mut();
        assert_eq!(cf_config_new(curve, &params, &mut config), CfStatus::Ok);
        cf_config_free(config);

        params.q_bar = 1.5;
        let mut config = ptr::null_mut();
        assert_eq!(cf_config_new(curve, &params, &mut config), CfStatus::Config);
        assert!(last_error().contains("q_bar"));

        assert_eq!(cf_config_new(ptr::null(), &params, &mut config), CfStatus::NullPointer);
        let missing = CString::new("/nonexistent/run.toml").unwrap();
        assert_eq!(cf_config_load(missing.as_ptr(), &mut config), CfStatus::Io);
        cf_curve_free(curve);

        // freeing null handles is a no-op
        cf_curve_free(ptr::null_mut());
        cf_config_free(ptr::null_mut());
        cf_log_free(ptr::null_mut());
    }
}

#[test]
fn header_declares_the_api() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/curve_formation.h")).unwrap();
    for name in [
        "cf_last_error_message",
        "cf_curve_unit_square",
        "cf_config_reference",
        "cf_run",
        "cf_log_metrics",
        "cf_log_spacings",
        "cf_log_free",
        "typedef struct CfLog CfLog",
        "CF_STATUS_CONTRADICTION = 6",
    ] {
        assert!(header.contains(name), "header lacks {name}");
    }
    // compiles as C when a compiler is available
    if let Ok(status) = std::process::Command::new("cc")
        .args(["-fsyntax-only", "-Wall", "-Werror", "-x", "c"])
        .arg(concat!(env!("CARGO_MANIFEST_DIR"), "/include/curve_formation.h"))
        .status()
    {
        assert!(status.success(), "header does not compile");
    }
}
