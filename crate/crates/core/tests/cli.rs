use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn rescov(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rescov"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn help_and_usage_errors() {
    assert_eq!(code(&rescov(&["--help"])), 0);
    assert_eq!(code(&rescov(&[])), 2);
    assert_eq!(code(&rescov(&["simulate"])), 2);
    assert_eq!(code(&rescov(&["no-such-command"])), 2);
}

#[test]
fn check_rigidity_reports_and_signals_flexibility() {
    let dir = tempfile::tempdir().unwrap();
    let tri = write(
        dir.path(),
        "tri.json",
        r#"{"d":2,"positions":[[0,0],[1,0],[0,1]],"edges":[[0,1],[1,2],[0,2]]}"#,
    );
    let out = rescov(&["check-rigidity", "--framework", &tri]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout(&out).trim(), "n=3 m=3 rank=3 nullity=3 rigid=true");

    let path = write(
        dir.path(),
        "path.json",
        r#"{"d":2,"positions":[[0,0],[1,0],[2,1]],"edges":[[0,1],[1,2]]}"#,
    );
    let out = rescov(&["check-rigidity", "--framework", &path]);
    assert_eq!(code(&out), 1);
    assert!(stdout(&out).contains("rigid=false"));

    let broken = write(dir.path(), "bad.json", r#"{"d":2,"positions":[[0,0]]"#);
    assert_eq!(
        code(&rescov(&["check-rigidity", "--framework", &broken])),
        2
    );
    let spatial = write(
        dir.path(),
        "d3.json",
        r#"{"d":3,"positions":[],"edges":[]}"#,
    );
    assert_eq!(
        code(&rescov(&["check-rigidity", "--framework", &spatial])),
        2
    );
}

#[test]
fn built_network_passes_the_rigidity_check() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(
        dir.path(),
        "in.json",
        r#"{"positions":[[0,0],[2,0],[1,2],[3,2],[0,3],[2,4]],
            "socs":[0.9,0.8,0.6,0.4,0.2,0.95],"seed":3}"#,
    );
    let net = dir.path().join("net.json");
    let out = rescov(&[
        "build-network",
        "--input",
        &input,
        "--out",
        net.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout(&out).trim(), "n=6 m=9");

    let built: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&net).unwrap()).unwrap();
    let fw = write(dir.path(), "fw.json", &built["framework"].to_string());
    let out = rescov(&["check-rigidity", "--framework", &fw]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
}

#[test]
fn plan_return_prints_the_horizon() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(
        dir.path(),
        "plan.json",
        r#"{"state":{"pos":[3.0,3.0],"vel":[0.0,0.0]}}"#,
    );
    let plan = dir.path().join("plan_out.json");
    let out = rescov(&[
        "plan-return",
        "--input",
        &input,
        "--out",
        plan.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).starts_with("tau_star="));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(plan).unwrap()).unwrap();
    assert!(v["tau_star"].as_u64().unwrap() > 0);
}

#[test]
fn simulate_then_plot() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/tests/golden/three_robots.json"
    );
    let run = dir.path().join("run");
    let out = rescov(&[
        "simulate",
        "--config",
        cfg,
        "--out",
        run.to_str().unwrap(),
        "--steps",
        "30",
    ]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).starts_with("steps=30 "));
    for f in [
        "trace.csv",
        "events.jsonl",
        "summary.json",
        "config.json",
        "trajectories.svg",
        "soc.svg",
        "coverage.svg",
    ] {
        assert!(run.join(f).exists(), "{f} missing");
    }

    let plots = dir.path().join("plots");
    let out = rescov(&[
        "plot",
        "--trace",
        run.join("trace.csv").to_str().unwrap(),
        "--events",
        run.join("events.jsonl").to_str().unwrap(),
        "--out",
        plots.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    assert_eq!(fs::read_dir(&plots).unwrap().count(), 3);
}

#[test]
fn exhausted_battery_is_fatal() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "cfg.json",
        r#"{"n_robots":3,"steps":50,"seed":7,
            "initial_positions":[[1.0,1.0],[4.0,2.0],[2.0,3.0]],
            "initial_socs":[0.95,0.9,0.05]}"#,
    );
    let out = rescov(&[
        "simulate",
        "--config",
        &cfg,
        "--out",
        dir.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 3);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("o/summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["aborted"], true);
}

#[test]
fn unknown_config_field_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cfg.json", r#"{"n_robot": 3}"#);
    let out = rescov(&[
        "simulate",
        "--config",
        &cfg,
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2);
}
