use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn specscale(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_specscale"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn generate_writes_labeled_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("toy.csv");
    let o = specscale(&["generate", "--n", "20", "--seed", "2", "--out", path_str(&out)]);
    assert!(o.status.success());
    let text = fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(header.len(), 11);
    assert_eq!(header[10], "label");
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 20);
    assert!(rows[0].ends_with(",1"));
    assert!(rows[19].ends_with(",2"));
}

#[test]
fn tab_output_follows_extension() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("toy.tsv");
    assert!(specscale(&["generate", "--n", "10", "--out", path_str(&out)]).status.success());
    let text = fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().next().unwrap().split('\t').count(), 11);
}

#[test]
fn cluster_writes_report_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("res");
    let o = specscale(&[
        "cluster", "--toy", "40", "--sigma-grid", "1,10", "--repetitions", "2", "--out-dir", path_str(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let table = String::from_utf8(o.stdout).unwrap();
    assert!(table.starts_with("task"));
    assert_eq!(table.matches('*').count(), 1, "one selected sigma row");

    let runs = fs::read_to_string(out.join("runs.csv")).unwrap();
    assert!(runs.starts_with("task,method,ell,protocol,train_fraction,sigma,repetition"));
    assert_eq!(runs.lines().count(), 1 + 2 * 2);
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 1 + 2);

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "cluster");
    assert_eq!(manifest["config"]["kmeans_restarts"], 20);
    assert_eq!(manifest["data"]["n_samples"], 40);
}

#[test]
fn sweep_with_no_fractions_succeeds_empty() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("res");
    let o = specscale(&["sweep", "--toy", "20", "--fractions", "", "--out-dir", path_str(&out)]);
    assert!(o.status.success());
    let runs = fs::read_to_string(out.join("runs.csv")).unwrap();
    assert_eq!(runs.lines().count(), 1);
}

#[test]
fn config_file_overrides_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    fs::write(&cfg, "# comment\nsigma_grid = 10\nrepetitions = 1\n").unwrap();
    let out = dir.path().join("res");
    let o = specscale(&[
        "classify", "--toy", "30", "--sigma-grid", "1,2,3", "--config", path_str(&cfg), "--out-dir", path_str(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 2);
    assert!(summary.lines().nth(1).unwrap().contains(",10,"));
}

#[test]
fn inspect_scaling_prints_factor_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("factors.csv");
    let o = specscale(&["inspect-scaling", "--toy", "80", "--sigma", "1", "--out", path_str(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "feature,factor");
    assert_eq!(lines.len(), 11);
    for l in &lines[1..] {
        let v: f64 = l.split(',').nth(1).unwrap().parse().unwrap();
        assert!(v.is_finite());
    }
}

#[test]
fn bad_input_gives_structured_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "a,b,label\n1,2,1\n3,x,2\n").unwrap();
    let o = specscale(&["classify", "--data", path_str(&bad)]);
    assert!(!o.status.success());
    let err: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"], "parse");
    assert!(err["message"].as_str().unwrap().ends_with("bad.csv:3: 'x' is not a finite number"));

    let o = specscale(&["cluster", "--toy", "20", "--sigma-grid", "-1"]);
    assert!(!o.status.success());
    let err: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"], "config");

    let o = specscale(&["cluster", "--toy", "20", "--no-such-flag"]);
    assert!(!o.status.success());
    let err: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"], "usage");

    let o = specscale(&["cluster"]);
    assert!(!o.status.success());
    let err: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"], "config");
}
