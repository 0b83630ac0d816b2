use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(dir: &Path, cmd: &str, config: &str, extra: &[&str]) -> Output {
    let path = dir.join(format!("{cmd}.json"));
    fs::write(&path, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_henon-lab"))
        .arg(cmd)
        .arg("--config")
        .arg(&path)
        .arg("--out")
        .arg(dir.join("out"))
        .args(extra)
        .output()
        .unwrap()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn csv_rows(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(str::to_owned).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(str::to_owned).collect()).collect();
    (header, rows)
}

const TOY: &str = r#"{"family": {"kind": "toy", "b": 0.01, "b2": 1e-5, "coupling": 1e-3}, "depth": 6}"#;

#[test]
fn malformed_config_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), "renormalize", "{\"family\": ", &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("malformed config"));
    let out = run(dir.path(), "renormalize", TOY, &["--depth", "11"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn surface_rejects_planar_family() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), "surface", r#"{"family": {"kind": "planar", "b": 0.01}, "depth": 3}"#, &[]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn non_renormalizable_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"family": {"kind": "planar", "b": 0.01, "c": 1.0}, "depth": 4}"#;
    let out = run(dir.path(), "renormalize", cfg, &[]);
    assert_eq!(out.status.code(), Some(2));
    let summary = read_json(&dir.path().join("out/summary.json"));
    assert_eq!(summary["depth"], 0);
    assert!(summary["stopped"].is_string());
}

#[test]
fn degenerate_family_reaches_the_cap() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), "renormalize", r#"{"family": {"kind": "planar", "b": 0.0}, "depth": 10}"#, &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = read_json(&dir.path().join("out/summary.json"));
    assert_eq!(summary["depth"], 10);
    assert_eq!(summary["conjugacy_ok"], true);
    let (header, rows) = csv_rows(&dir.path().join("out/levels.csv"));
    assert_eq!(header.last().unwrap(), "config_hash");
    assert_eq!(rows.len(), 11);
    let tower = read_json(&dir.path().join("out/tower.json"));
    assert_eq!(tower["maps"].as_array().unwrap().len(), 11);
}

#[test]
fn toy_summary_reports_jacobian_factors() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), "renormalize", TOY, &["--depth", "4"]);
    assert!(out.status.success());
    let s = read_json(&dir.path().join("out/summary.json"));
    assert_eq!(s["product_rule"], true);
    assert!((s["b1"].as_f64().unwrap() / 1e-2 - 1.0).abs() < 1e-6);
    assert!((s["b2"].as_f64().unwrap() / 1e-5 - 1.0).abs() < 1e-6);
    let cfg = read_json(&dir.path().join("out/config.json"));
    assert_eq!(cfg["depth"], 4);
}

#[test]
fn surface_residual_table_has_slope_fit() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), "surface", TOY, &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let s = read_json(&dir.path().join("out/surface.json"));
    assert!(s["defect"].as_f64().unwrap() <= 1e-8);
    let slope = s["abs_residual_slope"].as_f64().unwrap();
    let log_sigma = s["log_sigma"].as_f64().unwrap();
    assert!((slope / log_sigma - 1.0).abs() < 0.2);
    let (_, rows) = csv_rows(&dir.path().join("out/rescaled.csv"));
    assert_eq!(rows.len(), 5);
    let dat = fs::read_to_string(dir.path().join("out/surface.dat")).unwrap();
    assert!(dat.lines().all(|l| l.split(' ').count() == 2));
}

#[test]
fn geometry_rows_cover_grid_and_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"family": {"kind": "planar", "b": 0.01},
                  "grid": {"count": 3, "ks": [1, 2, 4]}}"#;
    let out = run(dir.path(), "geometry", cfg, &["--jobs", "1"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let first = fs::read(dir.path().join("out/geometry.csv")).unwrap();
    let (_, rows) = csv_rows(&dir.path().join("out/geometry.csv"));
    assert_eq!(rows.len(), 9);
    let hash = &rows[0].last().unwrap().clone();
    assert!(rows.iter().all(|r| r.last() == Some(hash)));

    let again = run(dir.path(), "geometry", cfg, &[]);
    assert!(again.status.success());
    assert_eq!(first, fs::read(dir.path().join("out/geometry.csv")).unwrap());
}

#[test]
fn seed_changes_hash() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"family": {"kind": "planar", "b": 0.01}, "depth": 2}"#;
    assert!(run(dir.path(), "renormalize", cfg, &[]).status.success());
    let a = read_json(&dir.path().join("out/summary.json"))["config_hash"].clone();
    assert!(run(dir.path(), "renormalize", cfg, &["--seed", "7"]).status.success());
    let b = read_json(&dir.path().join("out/summary.json"))["config_hash"].clone();
    assert_ne!(a, b);
}
