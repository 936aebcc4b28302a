use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn limitset(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_limitset"))
        .args(args)
        .current_dir(cwd)
        .output()
        .unwrap()
}

fn write_segment(dir: &Path) {
    fs::write(
        dir.join("segment.json"),
        r#"{"type": "parametric", "name": "segment", "params": {"from": [1, 0, 0], "to": [0, 1, 0]}}"#,
    )
    .unwrap();
}

#[test]
fn synthesize_verify_plot_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write_segment(d);
    let out = limitset(&["synthesize", "--curve", "segment.json", "--k", "6", "--out", "run"], d);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(d.join("run/certificate.json").exists());
    assert!(!d.join("run/.limitset.lock").exists());

    let out = limitset(&["verify", "--certificate", "run/certificate.json", "--out", "ver"], d);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let rep: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("ver/verification.json")).unwrap()).unwrap();
    assert_eq!(rep["pass"], true);

    let out = limitset(&["plot-data", "--certificate", "run/certificate.json", "--out", "plot"], d);
    assert_eq!(out.status.code(), Some(0));
    for f in ["trajectory.csv", "plan.csv", "curve.csv", "checkpoints.csv"] {
        let text = fs::read_to_string(d.join("plot").join(f)).unwrap();
        assert!(text.lines().count() > 1, "{f} is empty");
    }
    let traj = fs::read_to_string(d.join("plot/trajectory.csv")).unwrap();
    assert_eq!(traj.lines().next().unwrap(), limitset::trajectory::TABLE_HEADER);
    // 5 windows x 10 grid points
    assert_eq!(traj.lines().count(), 1 + 5 * 10);
}

#[test]
fn tampered_certificate_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write_segment(d);
    assert_eq!(limitset(&["synthesize", "--curve", "segment.json", "--k", "4", "--out", "run"], d).status.code(), Some(0));
    let path = d.join("run/certificate.json");
    let mut v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    let n = v["lengths"][1][0].as_str().unwrap().parse::<u64>().unwrap();
    v["lengths"][1][0] = serde_json::Value::String((n + 1).to_string());
    fs::write(&path, v.to_string()).unwrap();
    let out = limitset(&["verify", "--certificate", "run/certificate.json"], d);
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn usage_and_input_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(limitset(&["frobnicate"], d).status.code(), Some(2));
    assert_eq!(limitset(&["verify", "--certificate", "missing.json"], d).status.code(), Some(2));
    fs::write(d.join("bad.json"), "{\"type\": \"polyline\", \"points\": [[1, 0]]}").unwrap();
    let out = limitset(&["synthesize", "--curve", "bad.json", "--out", "run"], d);
    assert_eq!(out.status.code(), Some(2));
    write_segment(d);
    let out = limitset(&["synthesize", "--curve", "segment.json", "--k", "1", "--out", "run"], d);
    assert_eq!(out.status.code(), Some(2));
    let out = limitset(&["synthesize", "--curve", "segment.json", "--slit", "0.5", "--out", "run"], d);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn infeasible_plan_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write_segment(d);
    // epsilon_j drops below the rounding of a curve sample long before j = 200
    let out = limitset(
        &["synthesize", "--curve", "segment.json", "--k", "200", "--epsilon-ratio", "0.01", "--out", "run"],
        d,
    );
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn held_lock_refuses_a_second_writer() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write_segment(d);
    fs::create_dir(d.join("run")).unwrap();
    fs::write(d.join("run/.limitset.lock"), "1").unwrap();
    let out = limitset(&["synthesize", "--curve", "segment.json", "--k", "3", "--out", "run"], d);
    assert_eq!(out.status.code(), Some(2));
    assert!(!d.join("run/certificate.json").exists());
}

#[test]
fn cross_validate_writes_its_report() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = limitset(&["cross-validate", "--seed", "3", "--trials", "20", "--out", "cv"], d);
    assert_eq!(out.status.code(), Some(0));
    let rep: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("cv/cross_validation.json")).unwrap()).unwrap();
    assert_eq!(rep["trials"], 20);
    assert_eq!(rep["pass"], true);
}
