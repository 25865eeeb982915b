use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn yuoh(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_yuoh"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn configs() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs"))
}

fn simulate(dir: &Path, name: &str, total: &str, seed: &str, config: &str) -> String {
    let out = dir.join(name);
    let cfg = configs().join(config);
    let o = yuoh(&[
        "simulate",
        "--total",
        total,
        "--seed",
        seed,
        "--noise",
        cfg.to_str().unwrap(),
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    out.to_str().unwrap().to_string()
}

fn stderr_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stderr).expect("machine-readable error")
}

#[test]
fn simulate_then_analyze_ideal_million() {
    let dir = tempfile::tempdir().unwrap();
    let ds = simulate(dir.path(), "out.ds", "1000000", "7", "ideal.json");
    let csv = dir.path().join("csv");
    let o = yuoh(&["analyze", &ds, "--csv-dir", csv.to_str().unwrap()]);
    assert!(o.status.success());
    let r: Value = serde_json::from_slice(&o.stdout).unwrap();
    let chi = r["witnesses"]["chi_yo"]["value"].as_f64().unwrap();
    assert!((8.28..=8.39).contains(&chi), "chi_YO = {chi}");
    assert_eq!(r["provenance"]["seed"], 7);
    assert!(r["provenance"]["record_count"].as_u64().unwrap() >= 1_000_000);
    for f in ["correlators.csv", "signaling.csv", "signaling_histograms.csv", "eps.csv"] {
        assert!(csv.join(f).exists(), "{f}");
    }
    let correlators = std::fs::read_to_string(csv.join("correlators.csv")).unwrap();
    assert_eq!(correlators.lines().filter(|l| l.starts_with("pair,")).count(), 24);
}

#[test]
fn memory_counts_line() {
    let o = yuoh(&["memory", "--depth", "5"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().next(), Some("25 73 265 1033 3649"));
}

#[test]
fn memory_json_report() {
    let o = yuoh(&["memory", "--depth", "3", "--json"]);
    let text = String::from_utf8(o.stdout).unwrap();
    let (first, rest) = text.split_once('\n').unwrap();
    assert_eq!(first, "25 73 265");
    let v: Value = serde_json::from_str(rest).unwrap();
    assert_eq!(v["memory"]["counts"][0], 13);
}

#[test]
fn missing_dataset_has_its_own_exit_code() {
    let o = yuoh(&["analyze", "missing.ds"]);
    assert_eq!(o.status.code(), Some(4));
    assert_eq!(stderr_json(&o)["error"], "missing-file");
}

#[test]
fn bad_config_and_parse_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"detection_error_dark": 2.0}"#).unwrap();
    let out = dir.path().join("x.ds");
    let o = yuoh(&["simulate", "--total", "10", "--noise", cfg.to_str().unwrap(), out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(stderr_json(&o)["error"], "bad-config");

    std::fs::write(&cfg, r#"{"unknown_field": 1}"#).unwrap();
    let o = yuoh(&["simulate", "--total", "10", "--noise", cfg.to_str().unwrap(), out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));

    let ds = dir.path().join("broken.ds");
    std::fs::write(&ds, "# yuoh-dataset 1\nh0 zz:3\n").unwrap();
    let o = yuoh(&["analyze", ds.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(5));
    assert!(stderr_json(&o)["message"].as_str().unwrap().contains("zz:3"));
}

#[test]
fn unknown_subcommand_fails() {
    let o = yuoh(&["frobnicate"]);
    assert!(!o.status.success());
    assert_ne!(o.status.code(), Some(4));
}

#[test]
fn pipeline_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = simulate(dir.path(), "a.ds", "30000", "5", "noisy.json");
    let b = simulate(dir.path(), "b.ds", "30000", "5", "noisy.json");
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let ra = yuoh(&["analyze", &a]).stdout;
    let rb = yuoh(&["analyze", &b, "--shards", "4"]).stdout;
    assert_eq!(ra, rb);
}

#[test]
fn threshold_override_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let ds = simulate(dir.path(), "t.ds", "20000", "3", "noisy.json");
    let o = yuoh(&["analyze", &ds, "--threshold", "9.5"]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("threshold override"));
    let r: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(r["provenance"]["omitted_subsequences"].as_u64().unwrap() > 0);
}

#[test]
fn reconstruct_and_detect_model() {
    let dir = tempfile::tempdir().unwrap();
    let ds = simulate(dir.path(), "g.ds", "300000", "2", "ideal.json");
    let o = yuoh(&["reconstruct", &ds]);
    assert!(o.status.success());
    let r: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r["reconstruction"]["edge_count"], 24);
    assert_eq!(r["reconstruction"]["verified"], true);

    let o = yuoh(&["detect-model", &ds]);
    assert!(o.status.success());
    let r: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r["fit"]["crossing_threshold"], 5.5);

    let hist = dir.path().join("single.txt");
    let text: String = [(0, 368), (1, 368), (2, 184), (3, 61), (4, 15), (5, 3)]
        .iter()
        .map(|(k, n)| format!("{k} {n}\n"))
        .collect();
    std::fs::write(&hist, text).unwrap();
    let o = yuoh(&["detect-model", "--histogram", hist.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(7));
    assert_eq!(stderr_json(&o)["error"], "fit-failed");
}

#[test]
fn rays_table() {
    let o = yuoh(&["rays"]);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["rays"].as_array().unwrap().len(), 13);
    assert_eq!(v["edges"].as_array().unwrap().len(), 24);
}
