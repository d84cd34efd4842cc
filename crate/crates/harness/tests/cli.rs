use iscc_harness::design::Method;
use iscc_harness::experiment::{default_plan, ExperimentPlan};
use std::process::Command;

fn iscc() -> Command {
    Command::new(env!("CARGO_BIN_EXE_iscc"))
}

#[test]
fn oracle_subcommand_reports_every_family() {
    let out = iscc()
        .args(["oracle", "--suite", "projections", "--instances", "10"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().count() >= 7);
    assert!(text.lines().all(|l| l.ends_with("ok")), "{text}");
}

#[test]
fn unknown_oracle_suite_is_an_error() {
    let out = iscc().args(["oracle", "--suite", "nope"]).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8(out.stderr)
        .unwrap()
        .contains("unknown suite"));
}

#[test]
fn solve_writes_waveforms_and_reports() {
    let dir = tempfile::tempdir().unwrap();
    let mut plan = default_plan();
    plan.sweep.values = vec![10.0];
    plan.methods = vec![Method::Iscc, Method::Bf];
    let config = dir.path().join("plan.json");
    std::fs::write(&config, plan.to_json()).unwrap();
    let out = dir.path().join("out");
    let status = iscc()
        .args([
            "solve",
            "--config",
            config.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert!(status.success());
    for name in [
        "waveform_0_iscc.csv",
        "waveform_0_bf.csv",
        "report_0_iscc.json",
    ] {
        assert!(out.join(name).exists(), "{name} missing");
    }
    let rows = std::fs::read_to_string(out.join("waveform_0_iscc.csv"))
        .unwrap()
        .lines()
        .count();
    assert_eq!(rows, 1 + plan.scene.frame_len * plan.scene.n_tx);
}

#[test]
fn plan_subcommand_prints_the_default_plan() {
    let out = iscc().arg("plan").output().unwrap();
    assert!(out.status.success());
    let plan = ExperimentPlan::from_json(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(plan.to_json(), default_plan().to_json());
}
