use std::process::Command;

fn ssfm() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ssfm"))
}

#[test]
fn check_default_parameters_exits_zero_with_json_report() {
    let out = ssfm().args(["check", "--N", "3"]).output().unwrap();
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["assumption1"]["holds"], true);
    assert_eq!(v["assumption2"].as_array().unwrap().len(), 2);
    let h = v["cfl_max_h"].as_f64().unwrap();
    assert!((h - std::f64::consts::PI / (4.0 * 256.8)).abs() < 1e-15);
}

#[test]
fn check_reports_failed_stability_with_exit_one() {
    let out = ssfm()
        .args(["check", "--h", "0.042", "--N", "2"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["assumption1"]["holds"], false);
}

#[test]
fn configuration_errors_exit_two() {
    for args in [
        vec!["check", "--h", "-1"],
        vec!["check", "--scheme", "rk4"],
        vec!["simulate", "--config", "/nonexistent/run.json"],
        vec!["frobnicate"],
    ] {
        let out = ssfm().args(&args).output().unwrap();
        assert_eq!(out.status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn simulate_writes_three_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = ssfm()
        .args([
            "simulate", "--K", "8", "--steps", "400", "--run-id", "t1", "--out",
        ])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    for f in ["t1_series.csv", "t1_spectrum.csv", "t1_meta.json"] {
        assert!(dir.path().join(f).is_file(), "{f}");
    }
    let series = std::fs::read_to_string(dir.path().join("t1_series.csv")).unwrap();
    assert!(series.starts_with("t,mass,orbital_distance,D"));
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("t1_meta.json")).unwrap())
            .unwrap();
    assert_eq!(meta["n_steps"], 400);
    assert_eq!(meta["seed"], 1);
}

#[test]
fn repeated_runs_are_bitwise_identical() {
    let dir = tempfile::tempdir().unwrap();
    for id in ["a", "b"] {
        let st = ssfm()
            .args([
                "simulate", "--K", "8", "--steps", "300", "--seed", "42", "--run-id", id, "--out",
            ])
            .arg(dir.path())
            .status()
            .unwrap();
        assert!(st.success());
    }
    let read = |n: &str| std::fs::read(dir.path().join(n)).unwrap();
    assert_eq!(read("a_series.csv"), read("b_series.csv"));
    assert_eq!(read("a_spectrum.csv"), read("b_spectrum.csv"));
}

#[test]
fn unstable_focusing_run_is_flagged_but_exits_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let out = ssfm()
        .args([
            "simulate", "--K", "8", "--rho2", "0.6", "--h", "0.01", "--steps", "4000", "--run-id",
            "u", "--out",
        ])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unstable = true"));
}

#[test]
fn sweep_writes_one_row_per_grid_point() {
    let dir = tempfile::tempdir().unwrap();
    let out = ssfm()
        .args([
            "sweep",
            "--K",
            "4",
            "--N",
            "2",
            "--h-axis",
            "0.01,0.02",
            "--rho2-axis",
            "0.1:0.3:3",
            "--out",
        ])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.code() == Some(0) || out.status.code() == Some(1));
    let csv = std::fs::read_to_string(dir.path().join("sweep_sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 6);
    assert_eq!(String::from_utf8_lossy(&out.stdout), csv);
}
