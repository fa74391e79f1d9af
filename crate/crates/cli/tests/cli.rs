use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn relpot(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_relpot")).args(args).env_remove("RELPOT_THREADS").output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

/// Parses CSV output into (header, rows).
fn csv_rows(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let head = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|x| x.unwrap().iter().map(String::from).collect()).collect();
    (head, rows)
}

fn column(head: &[String], row: &[String], name: &str) -> String {
    row[head.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"))].clone()
}

fn value_of(out: &Output) -> f64 {
    assert_eq!(code(out), 0, "stderr: {}", stderr(out));
    let (h, rows) = csv_rows(&stdout(out));
    assert_eq!(rows.len(), 1);
    column(&h, &rows[0], "value").parse().unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

#[test]
fn eval_levy_density() {
    let v = value_of(&relpot(&["eval", "--what", "levy", "--alpha", "1", "--d", "1", "--m", "1", "--x", "1"]));
    // K_1(1)/π, 30-digit mpmath value.
    assert!((v - 0.191_593_021_937_282_43).abs() < 1e-12, "{v}");
}

#[test]
fn eval_brownian_halfline_green() {
    let v = value_of(&relpot(&["eval", "--what", "green-gauss", "--domain", "halfline", "--x", "2", "--y", "5"]));
    assert_eq!(v, 2.0);
}

#[test]
fn eval_tail_envelope() {
    let v = value_of(&relpot(&["eval", "--what", "env-tail", "--alpha", "1", "--x", "4", "--t", "64"]));
    assert_eq!(v, 0.5);
}

#[test]
fn eval_grid_product_and_provenance() {
    let o = relpot(&["eval", "--what", "gaussian", "--t", "0.5,1", "--x", "0:2:lin:3", "--seed", "11"]);
    assert_eq!(code(&o), 0);
    let (h, rows) = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 6);
    for name in ["seed", "config_hash", "version"] {
        assert!(h.iter().any(|c| c == name), "missing provenance column {name}");
    }
    assert!(rows.iter().all(|r| column(&h, r, "seed") == "11"));
    assert_eq!(column(&h, &rows[0], "version"), env!("CARGO_PKG_VERSION"));
    assert_eq!(column(&h, &rows[0], "config_hash").len(), 64);
    // g_u(0) = (4πu)^{-1/2}
    let g0: f64 = column(&h, &rows[0], "value").parse().unwrap();
    assert!((g0 - (2.0 * std::f64::consts::PI).sqrt().recip()).abs() < 1e-15);
}

#[test]
fn eval_unknown_name_lists_known_names() {
    let o = relpot(&["eval", "--what", "nosuch", "--x", "1"]);
    assert_eq!(code(&o), 2);
    let e = stderr(&o);
    assert!(e.contains("nosuch") && e.contains("levy") && e.contains("env-tail"), "{e}");
}

#[test]
fn eval_domain_violation_names_point() {
    let o = relpot(&["eval", "--what", "u1", "--x", "0.5,0"]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("x=0"), "{}", stderr(&o));
}

#[test]
fn eval_outside_regime_is_a_domain_error() {
    // The tail envelope is asserted for t >= 1 only.
    let o = relpot(&["eval", "--what", "env-tail", "--x", "1", "--t", "0.5"]);
    assert_eq!(code(&o), 3);
}

#[test]
fn bad_grid_spec_is_usage_error() {
    assert_eq!(code(&relpot(&["eval", "--what", "levy", "--x", "1:2:cubic:3"])), 2);
    assert_eq!(code(&relpot(&["eval", "--what", "levy"])), 2);
}

#[test]
fn json_output_carries_provenance() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("out.json");
    let o = relpot(&["eval", "--what", "env-tail", "--alpha", "1", "--x", "4", "--t", "64", "--format", "json", "-o", p.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let v = json(&p);
    assert_eq!(v["tool"], "relpot");
    assert_eq!(v["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(v["seed"], 0);
    assert_eq!(v["rows"][0]["value"], 0.5);
}

#[test]
fn simulate_exit_is_deterministic() {
    let args = [
        "simulate", "--kind", "exit", "--domain", "interval", "--R", "2", "--x", "1", "--alpha", "1", "--m", "1", "--n", "100000",
        "--seed", "7",
    ];
    let a = relpot(&args);
    let b = relpot(&args);
    assert_eq!(code(&a), 0, "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    // Worker count does not change results.
    let mut one = args.to_vec();
    one.extend(["--threads", "1"]);
    assert_eq!(relpot(&one).stdout, a.stdout);
}

#[test]
fn simulate_deep_interior_survives() {
    let v = value_of(&relpot(&["simulate", "--kind", "survival", "--domain", "halfspace", "--d", "1", "--x", "1000", "--t", "1"]));
    assert!(v > 0.99, "{v}");
}

#[test]
fn simulate_exit_law_agrees_with_identity_report() {
    let sim = value_of(&relpot(&["simulate", "--kind", "exitlaw", "--domain", "interval", "--R", "2", "--x", "1", "--E", "3,4"]));
    let dir = tempfile::tempdir().unwrap();
    let o = relpot(&["verify", "--suite", "ikeda-watanabe", "--alpha", "1", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = &json(&dir.path().join("ikeda-watanabe.json"))["reports"][0];
    let grid = r["grid"].as_array().unwrap();
    let i = grid.iter().position(|g| g["alpha"] == 1.0).expect("an alpha = 1 row");
    let reference = r["references"][i].as_f64().unwrap();
    let allowance = r["allowances"][i].as_f64().unwrap();
    assert!((sim - reference).abs() <= allowance, "sim {sim} reference {reference} allowance {allowance}");
}

#[test]
fn simulate_precondition_violation_exits_3() {
    // Target overlapping the domain.
    let o = relpot(&["simulate", "--kind", "exitlaw", "--domain", "interval", "--R", "2", "--x", "1", "--E", "1,4"]);
    assert_eq!(code(&o), 3);
    // Start outside the domain.
    let o = relpot(&["simulate", "--kind", "exit", "--domain", "interval", "--R", "2", "--x", "3", "--n", "10"]);
    assert_eq!(code(&o), 3);
}

#[test]
fn verify_identities_pass() {
    let dir = tempfile::tempdir().unwrap();
    let o = relpot(&["verify", "--suite", "identities", "--alpha", "1", "--d", "1", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}\n{}", stdout(&o), stderr(&o));
    let doc = json(&dir.path().join("identities.json"));
    let reports = doc["reports"].as_array().unwrap();
    assert_eq!(reports.len(), 8);
    for r in reports {
        assert_eq!(r["verdict"], "pass", "{}", r["name"]);
        let res = r["residuals"].as_array().unwrap();
        let allow = r["allowances"].as_array().unwrap();
        for (x, a) in res.iter().zip(allow) {
            assert!(x.as_f64().unwrap() <= a.as_f64().unwrap());
        }
    }
    assert!(dir.path().join("identities.csv").exists());
}

#[test]
fn verify_unknown_suite_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = relpot(&["verify", "--suite", "nosuchsuite", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("tail"));
    assert!(!dir.path().join("nosuchsuite.json").exists());
}

#[test]
fn verify_rerun_is_byte_identical() {
    // Reduced path count keeps the test short; the full-size rerun lives in the acceptance target.
    let run = |dir: &Path| {
        let o = relpot(&["verify", "--suite", "tail", "--seed", "7", "--alpha", "1", "--n", "3000", "--out", dir.to_str().unwrap()]);
        assert!(matches!(code(&o), 0 | 1), "{}", stderr(&o));
        (std::fs::read(dir.join("tail.json")).unwrap(), std::fs::read(dir.join("tail.csv")).unwrap())
    };
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert_eq!(run(a.path()), run(b.path()));
    let doc = json(&a.path().join("tail.json"));
    assert_eq!(doc["seed"], 7);
    assert_eq!(doc["reports"][0]["seed"], 7);
}

#[test]
fn config_file_then_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "[params]\nalpha = 1.5\nd = 1\n[mc]\nmaster_seed = 3\n").unwrap();
    let c = cfg.to_str().unwrap();
    let o = relpot(&["--config", c, "eval", "--what", "levy", "--x", "1"]);
    let (h, rows) = csv_rows(&stdout(&o));
    assert_eq!(column(&h, &rows[0], "alpha"), "1.5");
    assert_eq!(column(&h, &rows[0], "seed"), "3");
    let o = relpot(&["--config", c, "eval", "--what", "levy", "--x", "1", "--alpha", "0.5"]);
    let (h, rows) = csv_rows(&stdout(&o));
    assert_eq!(column(&h, &rows[0], "alpha"), "0.5");
}

#[test]
fn config_file_rejects_unknown_keys() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "[params]\nalpah = 1.5\n").unwrap();
    let o = relpot(&["--config", cfg.to_str().unwrap(), "eval", "--what", "levy", "--x", "1"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("alpah"));
}

#[test]
fn invalid_thread_cap_is_rejected() {
    let o = Command::new(env!("CARGO_BIN_EXE_relpot"))
        .args(["eval", "--what", "levy", "--x", "1"])
        .env("RELPOT_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
}

#[test]
fn list_shows_names() {
    let o = relpot(&["list"]);
    assert_eq!(code(&o), 0);
    let s = stdout(&o);
    for n in ["green1", "env-interval-green", "ikeda-watanabe", "killed-density-offdiag"] {
        assert!(s.contains(n), "{n}");
    }
}
