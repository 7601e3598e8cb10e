use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mimo-assoc"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap()
}

#[test]
fn powermin_writes_csv_and_sidecar_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let o = run(&["powermin", "--seed", "3", "--drops", "4", "--antennas", "40,80", "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let csv = read(&a.join("results.csv"));
    assert_eq!(csv, read(&b.join("results.csv")));
    assert!(csv.starts_with("antennas,metric,value\n"));
    assert!(csv.contains("40,bad_service_opt,"));
    assert!(csv.contains("80,mean_power_opt_w,"));
    assert!(!csv.contains("mean_maxmin_xi"));

    let sidecar: serde_json::Value = serde_json::from_str(&read(&a.join("results.json"))).unwrap();
    assert_eq!(sidecar["config"]["rng_seed"], 3);
    assert_eq!(sidecar["config"]["mode"]["target_se"], 1.0);
}

#[test]
fn maxmin_trace_is_json_lines() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["maxmin", "--drops", "2", "--antennas", "64", "--trace", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let trace = read(&dir.path().join("trace.jsonl"));
    assert!(trace.lines().count() > 2);
    for line in trace.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(v["candidate"].is_f64() && v["feasible"].is_boolean());
        assert!(v["policy"] == "optimal" || v["policy"] == "max_snr");
    }
}

#[test]
fn infeasible_only_run_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["powermin", "--drops", "2", "--antennas", "8", "--target-se", "20", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let csv = read(&dir.path().join("results.csv"));
    assert!(csv.contains("8,bad_service_opt,1\n"));
    assert!(!csv.contains("mean_power_opt_w"));
}

#[test]
fn drop_prints_json_and_dumps_lp() {
    let dir = tempfile::tempdir().unwrap();
    let lp = dir.path().join("drop.lp");
    let o = run(&["drop", "--seed", "5", "--antennas", "100", "--dump-lp", lp.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["optimal"]["status"], "optimal");
    assert_eq!(v["optimal"]["serving_sets"].as_array().unwrap().len(), 20);
    let parsed = mimo_assoc::lp::parse_text(&read(&lp)).unwrap();
    assert_eq!((parsed.num_vars(), parsed.num_rows()), (80, 24));
}

#[test]
fn scenario_file_with_units() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("scenario.json");
    std::fs::write(
        &file,
        r#"{"num_users": 6, "pmax": {"value": 43, "unit": "dBm"}, "noise_dl": {"value": -94, "unit": "dBm"}}"#,
    )
    .unwrap();
    let o = run(&["drop", "--scenario", file.to_str().unwrap(), "--antennas", "64"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let pmax = v["scenario"]["pmax"][0].as_f64().unwrap();
    assert!((pmax - 19.952623149688797).abs() < 1e-9);
    assert_eq!(v["scenario"]["user_positions"].as_array().unwrap().len(), 6);
}

#[test]
fn errors_exit_with_one() {
    let o = run(&["powermin", "--scenario", "/nonexistent/s.json", "--drops", "1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("/nonexistent/s.json"));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"pmax": 40}"#).unwrap();
    let o = run(&["drop", "--scenario", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));

    let o = run(&["powermin", "--drops", "0"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn validate_small_run() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["validate", "--drops", "2", "--samples", "20000", "--tolerance", "0.05", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(read(&dir.path().join("validate.jsonl")).lines().count() >= 2);
}
