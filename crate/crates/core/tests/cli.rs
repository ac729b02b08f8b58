use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn default_scenario() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/default.toml")
}

fn bisac(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bisac")).args(args).arg("--out").arg(out).output().expect("binary runs")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn expect_failure(scenario: &Path, experiment: &str, code: i32, kind: &str) -> Value {
    let out = tempfile::tempdir().unwrap();
    let res = bisac(&[experiment, scenario.to_str().unwrap()], out.path());
    assert_eq!(res.status.code(), Some(code), "{}", String::from_utf8_lossy(&res.stderr));
    let err = json(&out.path().join("error.json"));
    assert_eq!(err["exit_code"], code);
    assert_eq!(err["error"], kind);
    let stderr: Value = serde_json::from_slice(&res.stderr).unwrap();
    assert_eq!(stderr, err);
    err
}

#[test]
fn solve_writes_solution_trace_and_manifest() {
    let out = tempfile::tempdir().unwrap();
    let res = bisac(&["solve", default_scenario().to_str().unwrap()], out.path());
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let sol = json(&out.path().join("solution.json"));
    assert!(sol["gamma_t_db"].as_f64().unwrap() >= 15.0 - 1e-6);
    assert!(sol["gamma_ap_db"].as_f64().unwrap() >= 12.0 - 1e-6);
    assert!(sol["rate"].as_f64().unwrap() > 0.0);

    let trace = std::fs::read_to_string(out.path().join("trace.csv")).unwrap();
    assert_eq!(trace.lines().next().unwrap(), "iteration,y,F,rate,gamma_t,gamma_ap,power");
    assert!(!trace.contains('\r'));

    let manifest = json(&out.path().join("manifest.json"));
    let files: Vec<&str> = manifest["files"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    assert_eq!(files, ["solution.json", "trace.csv", "manifest.json"]);
    for f in &files {
        assert!(out.path().join(f).exists());
    }
    assert_eq!(manifest["scenario_hash"], sol["scenario_hash"]);
    let keys: Vec<&str> =
        manifest["assumptions"].as_array().unwrap().iter().map(|a| a["key"].as_str().unwrap()).collect();
    assert_eq!(keys, ["alpha", "waveform_len"]);
}

#[test]
fn beampattern_is_byte_identical_across_runs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let scenario = default_scenario();
    for dir in [&a, &b] {
        assert!(bisac(&["beampattern", scenario.to_str().unwrap()], dir.path()).status.success());
    }
    let read = |d: &tempfile::TempDir| std::fs::read(d.path().join("beampattern.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
    let text = String::from_utf8(read(&a)).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "theta_deg,overall_db,comm_db,tag_db,probe_db");
    assert_eq!(lines.count(), 181);
}

#[test]
fn roc_with_fixed_seed_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let scenario = default_scenario();
    for dir in [&a, &b] {
        let res = bisac(&["detection-roc", scenario.to_str().unwrap(), "--seed", "99"], dir.path());
        assert!(res.status.success());
    }
    let read = |d: &tempfile::TempDir| std::fs::read(d.path().join("roc.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
    assert_eq!(json(&a.path().join("manifest.json"))["seed"], 99);
}

#[test]
fn sweep_option_sets_points_and_column() {
    let out = tempfile::tempdir().unwrap();
    let res = bisac(&["power-sweep", default_scenario().to_str().unwrap(), "--sweep", "p_t_dbm=0:10:5"], out.path());
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let mut rdr = csv::Reader::from_path(out.path().join("sweep.csv")).unwrap();
    let headers = rdr.headers().unwrap().clone();
    assert_eq!(&headers[0], "p_t_dbm");
    let rate_col = headers.iter().position(|h| h == "rate").unwrap();
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    let points: Vec<f64> = rows.iter().map(|r| r[0].parse().unwrap()).collect();
    assert_eq!(points, [0.0, 5.0, 10.0]);
    let rates: Vec<f64> = rows.iter().map(|r| r[rate_col].parse().unwrap()).collect();
    assert!(rates.windows(2).all(|p| p[1] >= p[0] - 1e-6));
}

#[test]
fn malformed_scenario_exits_with_parse_code() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "n_t = [").unwrap();
    expect_failure(&path, "solve", 2, "parse");
}

#[test]
fn unknown_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.toml");
    std::fs::write(&path, "tx_power = 3\n").unwrap();
    expect_failure(&path, "solve", 2, "parse");
}

#[test]
fn out_of_range_value_exits_with_validation_code() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.toml");
    std::fs::write(&path, "n_t = 0\n").unwrap();
    expect_failure(&path, "solve", 3, "validation");
}

#[test]
fn unreachable_thresholds_exit_with_infeasible_code() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.toml");
    std::fs::write(&path, "p_t_dbm = -60.0\n").unwrap();
    let err = expect_failure(&path, "solve", 4, "infeasible");
    assert!(err.get("constraint").is_some());
}

#[test]
fn starved_solver_exits_with_solver_code() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.toml");
    std::fs::write(&path, "solver_max_iter = 1\n").unwrap();
    let err = expect_failure(&path, "solve", 5, "solver_failure");
    assert!(err.get("stage").is_some());
}

#[test]
fn sweep_flag_is_only_for_power_sweep() {
    let out = tempfile::tempdir().unwrap();
    let res = bisac(&["solve", default_scenario().to_str().unwrap(), "--sweep", "p_t_dbm=0:5:5"], out.path());
    assert_eq!(res.status.code(), Some(2));
}
