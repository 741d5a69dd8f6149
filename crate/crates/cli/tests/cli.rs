use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn hill(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hill"))
        .args(args)
        .arg("--out")
        .arg(dir)
        .output()
        .expect("binary runs")
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# hill-cli "));
    let body: String = lines.map(|l| format!("{l}\n")).collect();
    csv::Reader::from_reader(body.as_bytes())
        .records()
        .map(|r| r.unwrap().iter().map(str::to_string).collect())
        .collect()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn f(s: &str) -> f64 {
    s.parse().unwrap()
}

#[test]
fn zero_potential_spectrum_is_the_free_table() {
    let dir = TempDir::new().unwrap();
    let out = hill(dir.path(), &["spectrum", "--potential", "zero", "--K", "64"]);
    assert_eq!(out.status.code(), Some(0));
    let rows = csv_rows(&dir.path().join("spectrum.csv"));
    assert!(rows.len() >= 20);
    for r in &rows {
        let n: f64 = f(&r[0]);
        let want = (n * PI).powi(2);
        assert!((f(&r[1]) - want).abs() <= 1e-9 * want);
        assert!((f(&r[3]) - want).abs() <= 1e-9 * want);
        assert_eq!(f(&r[5]), 0.0);
    }
}

#[test]
fn single_mode_first_gap() {
    let dir = TempDir::new().unwrap();
    let out = hill(dir.path(), &["spectrum", "--potential", "single-mode:c=0.05", "--K", "256"]);
    assert_eq!(out.status.code(), Some(0));
    let rows = csv_rows(&dir.path().join("spectrum.csv"));
    assert!((f(&rows[0][5]) - 0.1).abs() < 1e-4);
    let j = json(&dir.path().join("spectrum.json"));
    assert_eq!(j["trust_count"].as_u64().unwrap() as usize, rows.len());
    assert_eq!(j["gaps"].as_array().unwrap().len(), rows.len());
}

#[test]
fn json_is_sorted_and_stamped() {
    let dir = TempDir::new().unwrap();
    hill(dir.path(), &["spectrum", "--potential", "zero"]);
    let text = fs::read_to_string(dir.path().join("spectrum.json")).unwrap();
    let keys: Vec<&str> = text
        .lines()
        .filter(|l| l.starts_with("  \"") && !l.starts_with("   "))
        .map(|l| l.trim().split('"').nth(1).unwrap())
        .collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
    let hash = json(&dir.path().join("spectrum.json"))["meta"]["config_sha256"]
        .as_str()
        .unwrap()
        .to_string();
    let csv = fs::read_to_string(dir.path().join("spectrum.csv")).unwrap();
    assert!(csv.lines().next().unwrap().ends_with(&format!("config={hash}")));
}

#[test]
fn malformed_config_names_the_field() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "[model]\nK = 64\nweight = \"poly:x\"\n").unwrap();
    let out = hill(dir.path(), &["spectrum", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("model.weight"));

    fs::write(&cfg, "[run]\nseeed = 1\n").unwrap();
    let out = hill(dir.path(), &["spectrum", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("seeed"));
}

#[test]
fn config_file_and_flags_combine() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "[potential]\nspec = \"single-mode:c=0.02\"\n\n[model]\nK = 32\n").unwrap();
    let out = hill(dir.path(), &["spectrum", "--config", cfg.to_str().unwrap(), "--K", "48"]);
    assert_eq!(out.status.code(), Some(0));
    let meta = &json(&dir.path().join("spectrum.json"))["meta"]["config"];
    assert_eq!(meta["K"], 48);
    assert_eq!(meta["potential"], "single-mode:c=0.02");
}

#[test]
fn zero_potential_reduction_is_all_zero() {
    let dir = TempDir::new().unwrap();
    let out = hill(dir.path(), &["reduce", "--potential", "zero", "--n-max", "10"]);
    assert_eq!(out.status.code(), Some(0));
    for r in csv_rows(&dir.path().join("reduce.csv")) {
        assert_eq!(r[1], "ok");
        for col in [2, 3, 4, 5, 6, 7, 14, 15] {
            assert_eq!(f(&r[col]), 0.0);
        }
    }
}

#[test]
fn rows_below_threshold_are_reported_not_failed() {
    let dir = TempDir::new().unwrap();
    let out = hill(dir.path(), &["reduce", "--potential", "single-mode:c=0.2", "--n-max", "8"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = csv_rows(&dir.path().join("reduce.csv"));
    assert_eq!(rows[0][1], "below-threshold");
    assert_eq!(rows[7][1], "ok");
    let j = json(&dir.path().join("reduce.json"));
    assert!(j["thresholds"]["n_s"].as_u64().unwrap() > 1);
}

#[test]
fn outputs_are_deterministic() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    let args = ["reduce", "--potential", "random:m=0.004,band=12", "--seed", "17", "--n-max", "16"];
    hill(a.path(), &args);
    hill(b.path(), &args);
    for name in ["reduce.csv", "reduce.json"] {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap());
    }
    let c = TempDir::new().unwrap();
    hill(c.path(), &["reduce", "--potential", "random:m=0.004,band=12", "--seed", "18", "--n-max", "16"]);
    assert_ne!(fs::read(a.path().join("reduce.csv")).unwrap(), fs::read(c.path().join("reduce.csv")).unwrap());
}

#[test]
fn flow_at_time_zero_echoes_the_input() {
    let dir = TempDir::new().unwrap();
    let out = hill(dir.path(), &["flow", "--t", "0"]);
    assert_eq!(out.status.code(), Some(0));
    let j = json(&dir.path().join("flow.json"));
    assert_eq!(j["modes"], j["initial_modes"]);
    assert_eq!(j["asymptotic"], true);
}

#[test]
fn flow_keeps_actions() {
    let dir = TempDir::new().unwrap();
    let out = hill(dir.path(), &["flow", "--t", "1", "--dt", "0.25"]);
    assert_eq!(out.status.code(), Some(0));
    for r in csv_rows(&dir.path().join("flow.csv")) {
        assert!(f(&r[8]) <= 16.0 * f64::EPSILON * f(&r[7]));
    }
    assert_eq!(csv_rows(&dir.path().join("flow_snapshots.csv")).len(), 5 * 24);
}

#[test]
fn verify_sandwich_passes_and_detects_injected_gaps() {
    let dir = TempDir::new().unwrap();
    let out = hill(dir.path(), &["verify", "--suite", "sandwich"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let j = json(&dir.path().join("summary.json"));
    assert_eq!(j["passed"], 1);
    assert!(j["suites"]["sandwich"]["summary"]["sandwich_asserted"].as_u64().unwrap() > 0);

    let bad = TempDir::new().unwrap();
    let out = hill(bad.path(), &["verify", "--suite", "sandwich", "--perturb-gap", "0.5"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("gap sandwich"), "{err}");
    assert_eq!(json(&bad.path().join("summary.json"))["failed"], 1);
}

#[test]
fn airy_demo_writes_distance_table() {
    let dir = TempDir::new().unwrap();
    let out = hill(dir.path(), &["verify", "--suite", "airy-demo"]);
    assert_eq!(out.status.code(), Some(0));
    let rows = csv_rows(&dir.path().join("airy.csv"));
    assert!(rows.iter().all(|r| f(&r[1]) >= 0.1));
    assert!(f(&rows[0][2]) < 1e-4);
}

#[test]
fn unknown_suite_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let out = hill(dir.path(), &["verify", "--suite", "everything"]);
    assert_eq!(out.status.code(), Some(2));
}
