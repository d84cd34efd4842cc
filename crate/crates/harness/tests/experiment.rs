use iscc_harness::design::Method;
use iscc_harness::experiment::{default_plan, plan_hash, run_experiment, ExperimentPlan, Manifest};
use std::fs;

fn tiny_plan() -> ExperimentPlan {
    let mut plan = default_plan();
    plan.sweep.values = vec![5.0, 10.0];
    plan.methods = vec![Method::Iscc, Method::Slp, Method::Bf];
    plan.frames = 2;
    plan.noise_draws = 10;
    plan
}

#[test]
fn plan_round_trips_through_json() {
    let plan = tiny_plan();
    let back = ExperimentPlan::from_json(&plan.to_json()).unwrap();
    assert_eq!(plan_hash(&plan), plan_hash(&back));
    let mut bad = plan.clone();
    bad.frames = 0;
    assert!(bad.validate().is_err());
}

#[test]
fn interrupted_sweep_resumes_from_the_manifest() {
    let plan = tiny_plan();
    let dir = tempfile::tempdir().unwrap();
    let first = run_experiment(&plan, dir.path()).unwrap();
    assert!(first.reused.is_empty());
    let metrics = fs::read(dir.path().join("metrics.csv")).unwrap();

    // drop the last point as if the run had stopped before finishing it
    let path = dir.path().join("manifest.json");
    let mut manifest: Manifest = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    manifest.points.pop();
    fs::write(&path, serde_json::to_string(&manifest).unwrap()).unwrap();

    let second = run_experiment(&plan, dir.path()).unwrap();
    assert_eq!(second.reused, vec![0]);
    assert_eq!(second.rows, first.rows);
    assert_eq!(fs::read(dir.path().join("metrics.csv")).unwrap(), metrics);

    let mut changed = plan.clone();
    changed.noise_draws += 1;
    assert!(run_experiment(&changed, dir.path())
        .unwrap()
        .reused
        .is_empty());
}

#[test]
fn methods_at_a_point_share_their_symbol_frames() {
    let dir = tempfile::tempdir().unwrap();
    let run = run_experiment(&tiny_plan(), dir.path()).unwrap();
    for p in &run.manifest.points {
        assert!(p.ok, "point {} failed: {:?}", p.index, p.error);
        assert_eq!(p.jobs.len(), 3);
        assert!(p
            .jobs
            .windows(2)
            .all(|w| w[0].frame_hash == w[1].frame_hash));
        for r in &p.rows {
            assert!((0.0..=1.0).contains(&r.ser_user.ser));
            assert!((0.0..=1.0).contains(&r.ser_eve_min));
            assert!((0.0..=std::f64::consts::LN_2).contains(&r.jsd));
        }
    }
    for name in [
        "metrics.csv",
        "beampattern.csv",
        "manifest.json",
        "constellation_iscc_0.csv",
        "trace_1_iscc.csv",
    ] {
        assert!(dir.path().join(name).exists(), "{name} missing");
    }
}
