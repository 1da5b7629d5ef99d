use std::collections::HashMap;

use crs_core::control::{parse_trace, run_session, SessionConfig, TRACE_HEADER};
use crs_core::Error;

fn trace(rows: &[(f64, f64, f64, f64)], vr: bool) -> String {
    let mut s = String::new();
    if vr {
        s.push_str("# source: vr\n");
    }
    s.push_str(TRACE_HEADER);
    s.push('\n');
    for (t, x, y, z) in rows {
        s.push_str(&format!("{t},{x},{y},{z}\n"));
    }
    s
}

fn sweep() -> Vec<(f64, f64, f64, f64)> {
    (0..40)
        .map(|k| {
            let t = k as f64 * 25.0;
            (t, -40.0 + 2.0 * k as f64, 5.0 * (k as f64 * 0.3).sin(), 4.0)
        })
        .collect()
}

#[test]
fn replay_is_deterministic() {
    let tr = parse_trace(&trace(&sweep(), false)).unwrap();
    let cfg = SessionConfig::default();
    let a = run_session(&tr, &cfg).unwrap();
    let b = run_session(&tr, &cfg).unwrap();
    assert_eq!(a.command_log(), b.command_log());
    assert_eq!(a.frames, b.frames);
}

#[test]
fn logged_motion_respects_slew_and_travel() {
    let tr = parse_trace(&trace(&sweep(), false)).unwrap();
    let cfg = SessionConfig::default();
    let log = run_session(&tr, &cfg).unwrap();
    let mut last: HashMap<usize, (f64, f64)> = HashMap::new();
    for r in &log.records {
        assert!((0.0..=cfg.servo.travel).contains(&r.actual));
        let (t0, a0) = last.get(&r.channel).copied().unwrap_or((0.0, 0.0));
        let bound = cfg.servo.rate() * (r.t - t0).max(cfg.dt_ms);
        if last.contains_key(&r.channel) {
            assert!((r.actual - a0).abs() <= bound * (1.0 + 1e-9), "{r:?}");
        }
        last.insert(r.channel, (r.t, r.actual));
    }
    assert!(log.violations.is_empty());
    assert!(log.frames.iter().all(|f| f.processing_delay == 75.0));
}

#[test]
fn vr_traces_use_the_longer_delay() {
    let rows = [(0.0, 0.0, 0.0, 3.0)];
    let tr = parse_trace(&trace(&rows, true)).unwrap();
    assert!(tr.vr);
    let log = run_session(&tr, &SessionConfig::default()).unwrap();
    assert_eq!(log.frames[0].processing_delay, 160.0);
    let first = log.records.first().unwrap();
    assert!(first.t > 160.0);
}

#[test]
fn single_pose_settles_with_peak_under_the_finger() {
    let rows = [(0.0, 0.0, 0.0, 3.0)];
    let tr = parse_trace(&trace(&rows, false)).unwrap();
    let log = run_session(&tr, &SessionConfig::default()).unwrap();
    let f = &log.frames[0];
    let act = f.actuation.expect("settled");
    assert!(act > 0.0 && act <= 72.0 + 1.0);
    let peak = f.final_peak.unwrap();
    assert!(peak[0].hypot(peak[1]) < 1.0, "{peak:?}");
    assert!(log.mean_peak_lag().unwrap() >= 75.0);
}

#[test]
fn over_travel_frames_are_skipped_and_reported() {
    let rows = [
        (0.0, 0.0, 0.0, 3.0),
        (50.0, 0.0, 0.0, 40.0),
        (100.0, 10.0, 0.0, 3.0),
    ];
    let tr = parse_trace(&trace(&rows, false)).unwrap();
    let log = run_session(&tr, &SessionConfig::default()).unwrap();
    assert_eq!(log.violations.len(), 1);
    assert_eq!(log.violations[0].frame, 1);
    assert_eq!(log.frames.len(), 2);
}

#[test]
fn unsorted_traces_are_rejected() {
    let rows = [(10.0, 0.0, 0.0, 1.0), (5.0, 0.0, 0.0, 1.0)];
    let tr = parse_trace(&trace(&rows, false)).unwrap();
    assert!(matches!(
        run_session(&tr, &SessionConfig::default()),
        Err(Error::UnsortedTrace { index: 1 })
    ));
}

#[test]
fn malformed_traces_name_the_line() {
    let bad = format!("{TRACE_HEADER}\n0,0,0,1\n1,2,x,1\n");
    match parse_trace(&bad) {
        Err(Error::TraceFormat { line, .. }) => assert_eq!(line, 3),
        other => panic!("{other:?}"),
    }
    assert!(parse_trace("t,x\n0,1\n").is_err());
}
