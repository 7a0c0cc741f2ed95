use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fprw::factors::{FactorSpec, FiniteGroupSpec, LatticeSpec};
use fprw::mc::bfs_convolution;
use fprw::product::FreeProductSpec;
use serde_json::Value;
use tempfile::TempDir;

fn fprw(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fprw"))
        .args(args)
        .env_remove("FPRW_THREADS")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn lattices(d1: usize, d2: usize, a1: f64) -> String {
    format!(
        r#"{{"factors": [{{"type": "lattice", "dim": {d1}}}, {{"type": "lattice", "dim": {d2}}}], "weights": [{a1}, {}]}}"#,
        1.0 - a1
    )
}

fn run_ok(args: &[&str]) -> String {
    let out = fprw(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn keys(v: &Value) -> BTreeSet<String> {
    v.as_object().unwrap().keys().cloned().collect()
}

fn schema_keys(s: &Value) -> BTreeSet<String> {
    keys(&s["properties"])
}

#[test]
fn analyze_report_matches_schema() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "z56.json", &lattices(5, 6, 0.7));
    let report: Value = serde_json::from_str(&run_ok(&["analyze", "--config", arg(&cfg)])).unwrap();
    let schema: Value =
        serde_json::from_str(include_str!("../schema/analyze-report.schema.json")).unwrap();

    assert_eq!(keys(&report), schema_keys(&schema));
    let required: BTreeSet<String> = schema["required"]
        .as_array()
        .unwrap()
        .iter()
        .map(|k| k.as_str().unwrap().to_string())
        .collect();
    assert_eq!(required, schema_keys(&schema));
    assert_eq!(
        keys(&report["law"]),
        schema_keys(&schema["properties"]["law"])
    );
    let factor_schema = &schema["properties"]["factors"]["items"];
    for f in report["factors"].as_array().unwrap() {
        assert_eq!(keys(f), schema_keys(factor_schema));
        assert_eq!(
            keys(&f["singularity"]),
            schema_keys(&factor_schema["properties"]["singularity"]["oneOf"][1])
        );
    }

    // alpha_1 = 0.7 is above alpha_c ≈ 0.5087, so Z^5's law is inherited
    assert_eq!(report["law"]["label"], "n^-5/2");
    assert_eq!(report["law"]["factor"], 0);
    assert!((report["alpha_c"].as_f64().unwrap() - 0.508654).abs() < 1e-5);
    assert!((report["factors"][0]["psi_at_theta"].as_f64().unwrap() - 0.691).abs() < 0.002);
    assert_eq!(report["sqrt_coefficient"], Value::Null);
}

#[test]
fn analyze_degenerate_and_infinite_values() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "d.json",
        r#"{"factors": [{"type": "cyclic", "order": 2}, {"type": "cyclic", "order": 2}], "weights": [2, 2]}"#,
    );
    let out = fprw(&["analyze", "--config", arg(&cfg)]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("normalized"));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["law"]["label"], "n^-1/2");
    assert_eq!(report["law"]["kind"], "one_half_degenerate");
    assert_eq!(report["degenerate"], true);
    assert_eq!(report["factors"][0]["theta"], "inf");
    assert_eq!(report["weights"][0], 0.5);
    assert_eq!(report["warnings"].as_array().unwrap().len(), 1);
}

#[test]
fn config_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    let cases = [
        r#"{"factors": [{"type": "cyclic", "order": 2}, {"type": "cyclic", "order": 3}], "weights": [0, 0]}"#,
        r#"{"factors": [{"type": "cyclic", "order": 2}, {"type": "cyclic", "order": 3}], "weights": [1, 1], "extra": 1}"#,
        r#"{"factors": [{"type": "tree", "degree": 1}, {"type": "cyclic", "order": 3}], "weights": [1, 1]}"#,
        r#"{"factors": [{"type": "moebius"}, {"type": "cyclic", "order": 3}], "weights": [1, 1]}"#,
        r#"{"factors": [{"type": "lattice", "dim": 5, "tune_psi": 0.99}, {"type": "lattice", "dim": 6}], "weights": [1, 1]}"#,
        "not json",
    ];
    for (i, text) in cases.iter().enumerate() {
        let cfg = write_config(&dir, &format!("bad{i}.json"), text);
        let out = fprw(&["analyze", "--config", arg(&cfg)]);
        assert_eq!(
            out.status.code(),
            Some(2),
            "{text}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        assert!(String::from_utf8_lossy(&out.stderr).starts_with("error: "));
    }
    assert_eq!(fprw(&["analyze"]).status.code(), Some(2));
    assert_eq!(
        fprw(&["analyze", "--config", "/nonexistent/x.json"])
            .status
            .code(),
        Some(2)
    );
    let cfg = write_config(&dir, "ok.json", &lattices(3, 4, 0.5));
    assert_eq!(
        fprw(&["analyze", "--config", arg(&cfg), "--format", "csv"])
            .status
            .code(),
        Some(2)
    );
}

fn parse_csv(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| l.split(',').map(String::from).collect())
        .collect();
    (header, rows)
}

fn comments(text: &str) -> Vec<(String, String)> {
    text.lines()
        .filter_map(|l| l.strip_prefix("# "))
        .map(|l| {
            let (k, v) = l.split_once(" = ").unwrap();
            (k.to_string(), v.to_string())
        })
        .collect()
}

#[test]
fn series_rows_match_the_word_oracle() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "s.json",
        r#"{"factors": [{"type": "lattice", "dim": 1}, {"type": "cyclic", "order": 3}], "weights": [0.3, 0.7]}"#,
    );
    let text = run_ok(&["series", "--config", arg(&cfg), "--order", "14"]);
    let c = comments(&text);
    assert_eq!(c[0].0, "rho");
    assert_eq!(c[1], ("period".to_string(), "1".to_string()));
    let (header, rows) = parse_csv(&text);
    assert_eq!(header, ["n", "mu", "mu_rho_n"]);
    assert_eq!(rows.len(), 15);
    assert_eq!(rows[0][1], "1");
    let rho: f64 = c[0].1.parse().unwrap();

    let spec = FreeProductSpec::two(
        FactorSpec::Lattice(LatticeSpec::simple(1)),
        FactorSpec::FiniteGroup(FiniteGroupSpec::cyclic_pm(3, 1).unwrap()),
        0.3,
    )
    .unwrap();
    let bfs = bfs_convolution(&spec, 14).unwrap();
    for (n, row) in rows.iter().enumerate() {
        let mu: f64 = row[1].parse().unwrap();
        let scaled: f64 = row[2].parse().unwrap();
        assert!((mu - bfs.coeff(n)).abs() <= 1e-10, "n = {n}");
        assert!(
            (scaled - mu * rho.powi(n as i32)).abs() <= 1e-10 * scaled.max(1.0),
            "n = {n}"
        );
    }
}

#[test]
fn series_off_period_rows_are_zero() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "z11.json", &lattices(1, 2, 0.5));
    let text = run_ok(&["series", "--config", arg(&cfg), "--order", "40"]);
    assert!(text.contains("# period = 2"));
    let (_, rows) = parse_csv(&text);
    for row in rows.iter().skip(1).step_by(2) {
        assert_eq!(row[1], "0");
        assert_eq!(row[2], "0");
    }
    let json: Value = serde_json::from_str(&run_ok(&[
        "series",
        "--config",
        arg(&cfg),
        "--order",
        "4",
        "--format",
        "json",
    ]))
    .unwrap();
    assert_eq!(json["coefficients"].as_array().unwrap().len(), 5);
    // ¼ · ½ + ¼ · ¼: both steps in the same factor
    assert_eq!(json["coefficients"][2]["mu"], 0.1875);
}

fn phase_case(d1: usize, d2: usize) -> (String, Vec<(String, String)>) {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "p.json", &lattices(d1, d2, 0.5));
    let text = run_ok(&["phase", "--config", arg(&cfg), "--grid", "24"]);
    (text.clone(), comments(&text))
}

fn comment<'a>(c: &'a [(String, String)], key: &str) -> &'a str {
    &c.iter().find(|(k, _)| k == key).unwrap().1
}

#[test]
fn phase_cases() {
    let (_, c) = phase_case(3, 4);
    assert_eq!(comment(&c, "case"), "E");
    let (_, c) = phase_case(2, 7);
    assert_eq!(comment(&c, "case"), "B");
    assert_ne!(comment(&c, "alpha_low"), "none");
    assert_eq!(comment(&c, "alpha_high"), "none");
    let (text, c) = phase_case(5, 6);
    assert_eq!(comment(&c, "case"), "D");
    assert_eq!(comment(&c, "alpha_low"), "none");
    assert_eq!(comment(&c, "alpha_high"), "none");
    let (header, rows) = parse_csv(&text);
    assert_eq!(header, ["alpha1", "upsilon", "law", "near_critical"]);
    assert!(rows.len() >= 24);
    // Z^6's law below alpha_c, Z^5's above
    assert_eq!(rows[1][2], "n^-3");
    assert_eq!(rows[rows.len() - 2][2], "n^-5/2");
}

#[test]
fn phase_json_and_factor_count() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "p.json", &lattices(5, 6, 0.5));
    let out = dir.path().join("phase.json");
    run_ok(&[
        "phase",
        "--config",
        arg(&cfg),
        "--grid",
        "8",
        "--format",
        "json",
        "--out",
        arg(&out),
    ]);
    let d: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(d["case_label"], "D");
    assert!(d["grid"].as_array().unwrap().len() >= 8);
    assert_eq!(d["limits"].as_array().unwrap().len(), 3);

    let cfg = write_config(
        &dir,
        "pi3.json",
        r#"{"factors": [{"type": "cyclic", "order": 2}, {"type": "cyclic", "order": 2}, {"type": "cyclic", "order": 2}], "weights": [1, 1, 1]}"#,
    );
    let out = fprw(&["phase", "--config", arg(&cfg)]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("two factors"));
}

#[test]
fn simulate_is_reproducible_and_calibrated() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "m.json",
        r#"{"factors": [{"type": "cyclic", "order": 2}, {"type": "cyclic", "order": 3}], "weights": [0.5, 0.5], "options": {"walks": 50000}}"#,
    );
    let a = run_ok(&["simulate", "--config", arg(&cfg), "--seed", "11"]);
    let b = run_ok(&["simulate", "--config", arg(&cfg), "--seed", "11"]);
    assert_eq!(a, b);
    let (header, rows) = parse_csv(&a);
    assert_eq!(header, ["n", "empirical", "exact", "z_score"]);
    assert_eq!(rows.len(), 13);
    for row in &rows {
        let z: f64 = row[3].parse().unwrap();
        assert!(z.abs() <= 4.0, "{row:?}");
    }
    let empty = run_ok(&["simulate", "--config", arg(&cfg), "--steps", "0"]);
    assert_eq!(empty, "n,empirical,exact,z_score\n");
}

#[test]
fn thread_count_from_environment() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "m.json", &lattices(3, 4, 0.5));
    let bin = env!("CARGO_BIN_EXE_fprw");
    let one = Command::new(bin)
        .args([
            "simulate",
            "--config",
            arg(&cfg),
            "--walks",
            "3000",
            "--seed",
            "2",
        ])
        .env("FPRW_THREADS", "1")
        .output()
        .unwrap();
    let two = Command::new(bin)
        .args([
            "simulate",
            "--config",
            arg(&cfg),
            "--walks",
            "3000",
            "--seed",
            "2",
        ])
        .env("FPRW_THREADS", "2")
        .output()
        .unwrap();
    assert!(one.status.success());
    assert_eq!(one.stdout, two.stdout);
    let bad = Command::new(bin)
        .args(["analyze", "--config", arg(&cfg)])
        .env("FPRW_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}
