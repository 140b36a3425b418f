use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn sgmix(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sgmix"))
        .args(args)
        .env_remove("SGMIX_OUT_DIR")
        .output()
        .unwrap()
}

fn data_file(dir: &Path, n: usize) -> PathBuf {
    let path = dir.join("data.csv");
    let mut text = String::from("x,y\n");
    for i in 0..n {
        let x = (i as f64 + 0.5) / n as f64;
        // deterministic wiggle standing in for noise
        let y = (5.0 * x).sin() + 0.05 * (37.0 * i as f64).sin();
        text.push_str(&format!("{x},{y}\n"));
    }
    std::fs::write(&path, text).unwrap();
    path
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn missing_data_file_is_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("nope.csv");
    let o = sgmix(&["fit", missing.to_str().unwrap(), "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("nope.csv"), "{}", stderr(&o));
}

#[test]
fn fit_writes_artifacts_deterministically() {
    let tmp = tempfile::tempdir().unwrap();
    let data = data_file(tmp.path(), 32);
    let mut outputs = Vec::new();
    for k in 0..2 {
        let out = tmp.path().join(format!("run{k}"));
        let o = sgmix(&[
            "fit",
            data.to_str().unwrap(),
            "--p",
            "30",
            "--seed",
            "5",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        let mut files = Vec::new();
        for name in ["posterior_mean.csv", "bands.csv", "trace.csv", "manifest.json"] {
            files.push(std::fs::read(out.join(name)).unwrap());
        }
        outputs.push(files);
    }
    assert_eq!(outputs[0], outputs[1]);
    let manifest: Value = serde_json::from_slice(&outputs[0][3]).unwrap();
    assert_eq!(manifest["command"], "fit");
    assert!(manifest.get("wall_clock_secs").is_none());
    let bands = String::from_utf8(outputs[0][1].clone()).unwrap();
    assert_eq!(bands.lines().next().unwrap(), "x,mean,lower,upper");
    assert_eq!(bands.lines().count(), 33);
}

#[test]
fn record_timing_adds_wall_clock() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let o = sgmix(&[
        "diagnose",
        fixture("fixture_trace.csv").to_str().unwrap(),
        "--record-timing",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(read_json(&out.join("manifest.json"))["wall_clock_secs"].is_number());
}

#[test]
fn single_replication_benchmark() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let o = sgmix(&[
        "benchmark",
        "--function",
        "wave",
        "--n",
        "32",
        "--replications",
        "1",
        "--p",
        "30",
        "--max-iterations",
        "2000",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(out.join("report.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().filter(|l| !l.is_empty()).collect();
    assert!(rows[0].starts_with("replication,rmse,coverage"));
    assert_eq!(rows.len(), 2);
    assert!(rows[1].contains(",wave"));
    let report = read_json(&out.join("report.json"));
    assert_eq!(report[0]["replications"].as_array().unwrap().len(), 1);
    assert!(report[0]["mean_rmse"].as_f64().unwrap() > 0.0);
}

#[test]
fn unknown_function_lists_valid_names() {
    let tmp = tempfile::tempdir().unwrap();
    let o = sgmix(&["benchmark", "--function", "wobble", "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    for name in ["blip", "spikes", "heavisine", "corner"] {
        assert!(err.contains(name), "{err}");
    }
}

#[test]
fn all_functions_expand() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let o = sgmix(&[
        "benchmark",
        "--function",
        "all",
        "--n",
        "16",
        "--replications",
        "1",
        "--p",
        "20",
        "--max-iterations",
        "2000",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report = read_json(&out.join("report.json"));
    let names: Vec<&str> = report
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["function"].as_str().unwrap())
        .collect();
    assert_eq!(names.len(), 12);
    assert!(names.contains(&"doppler") && names.contains(&"tshsine"));
}

#[test]
fn config_file_and_unknown_keys() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.toml");
    std::fs::write(&cfg, "functions = [\"blip\"]\nwobble = 3\n").unwrap();
    let o = sgmix(&["benchmark", "--config", cfg.to_str().unwrap(), "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("wobble"), "{}", stderr(&o));
}

#[test]
fn ct_small_run() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let o = sgmix(&[
        "ct",
        "--resolution",
        "12",
        "--n-radii",
        "12",
        "--n-angles",
        "6",
        "--p",
        "20",
        "--max-iterations",
        "2000",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let manifest = read_json(&out.join("manifest.json"));
    assert_eq!(manifest["config"]["sigma2"].as_f64(), Some(0.1));
    let report = read_json(&out.join("report.json"));
    assert_eq!(report["n_obs"].as_u64(), Some(72));
    let pgm = std::fs::read(out.join("reconstruction.pgm")).unwrap();
    assert!(pgm.starts_with(b"P5\n12 12\n"));
}

#[test]
fn diagnose_matches_golden_output() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let o = sgmix(&["diagnose", fixture("fixture_trace.csv").to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let golden = read_json(&fixture("fixture_diagnostics.json"));
    assert_eq!(read_json(&out.join("diagnostics.json")), golden);
    let printed: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(printed, golden);
}

#[test]
fn diagnose_stationary_trace_keeps_everything() {
    let tmp = tempfile::tempdir().unwrap();
    let trace = tmp.path().join("trace.csv");
    let mut text = String::from("iter,loglik,T,sigma2,alpha,n_clusters,acc_locations,acc_jumps,acc_total_mass\n");
    // low-discrepancy sequence: no drift between the early and late windows
    let golden = 0.618_033_988_749_895f64;
    for i in 0..2000 {
        let v = (i as f64 * golden).fract();
        text.push_str(&format!("{i},{v},1,1,1,3,0.5,0.5,0.5\n"));
    }
    std::fs::write(&trace, text).unwrap();
    let out = tmp.path().join("out");
    let o = sgmix(&["diagnose", trace.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let d = read_json(&out.join("diagnostics.json"));
    assert_eq!(d["burn_in"]["converged"], true);
    assert_eq!(d["discarded_records"].as_u64(), Some(0));
}

#[test]
fn truncated_trace_reports_line() {
    let tmp = tempfile::tempdir().unwrap();
    let trace = tmp.path().join("trace.csv");
    let text = std::fs::read_to_string(fixture("fixture_trace.csv")).unwrap();
    let mut lines: Vec<String> = text.lines().take(10).map(String::from).collect();
    lines[3] = lines[3].split(',').take(5).collect::<Vec<_>>().join(",");
    std::fs::write(&trace, lines.join("\n")).unwrap();
    let o = sgmix(&["diagnose", trace.to_str().unwrap(), "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains(":4:"), "{}", stderr(&o));
}

#[test]
fn unknown_diagnose_column() {
    let tmp = tempfile::tempdir().unwrap();
    let o = sgmix(&[
        "diagnose",
        fixture("fixture_trace.csv").to_str().unwrap(),
        "--column",
        "bogus",
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
}
