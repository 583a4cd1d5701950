use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn run(dir: &Path, config: &str, args: &[&str]) -> Output {
    let cfg = dir.join("run.toml");
    fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_uzawa"))
        .args(args)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn rows(path: &Path) -> usize {
    fs::read_to_string(path).unwrap().lines().count() - 1
}

#[test]
fn check_accepts_baseline_and_rejects_violations() {
    let d = TempDir::new().unwrap();
    let small = "verify.samples = 2000\n";
    assert_eq!(code(&run(d.path(), small, &["check"])), 0);
    let report = fs::read_to_string(d.path().join("out/report.json")).unwrap();
    let json: serde_json::Value = serde_json::from_str(&report).unwrap();
    assert!((json["beta_zeta"].as_f64().unwrap() - 0.941176).abs() < 1e-6);
    assert!(d.path().join("out/report.txt").exists());

    assert_eq!(code(&run(d.path(), &format!("{small}model.beta = 0.9\n"), &["check"])), 2);
    // Learning too weak to offset depreciation.
    assert_eq!(code(&run(d.path(), &format!("{small}model.b = 0.04\n"), &["check"])), 2);
}

#[test]
fn solve_then_simulate() {
    let d = TempDir::new().unwrap();
    let o = run(d.path(), "", &["solve"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let out = d.path().join("out");
    assert_eq!(rows(&out.join("value.csv")), 64);
    assert_eq!(rows(&out.join("policy.csv")), 64);
    let diag: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("diagnostics.json")).unwrap()).unwrap();
    assert_eq!(diag["converged"], true);

    let o = run(d.path(), "", &["simulate", "--start", "1,1", "--horizon", "100"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(rows(&out.join("path.csv")), 101);
}

#[test]
fn solve_refuses_without_discounting() {
    let d = TempDir::new().unwrap();
    assert_eq!(code(&run(d.path(), "model.beta = 0.9\n", &["solve"])), 2);
    assert!(!d.path().join("out/value.csv").exists());
}

#[test]
fn non_convergence_keeps_partial_output() {
    let d = TempDir::new().unwrap();
    let o = run(d.path(), "solve.tol = 1e-14\nsolve.max_iterations = 5\n", &["solve"]);
    assert_eq!(code(&o), 3);
    let diag: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(d.path().join("out/diagnostics.json")).unwrap()).unwrap();
    assert_eq!(diag["converged"], false);
    assert_eq!(diag["iterations"], 5);
}

#[test]
fn simulate_needs_a_solution() {
    let d = TempDir::new().unwrap();
    assert_eq!(code(&run(d.path(), "", &["simulate"])), 4);
}

#[test]
fn forced_simulation_grows_human_capital() {
    let d = TempDir::new().unwrap();
    let o = run(d.path(), "simulate.policy = \"forced\"\nsimulate.study_time = 1.0\n", &["simulate", "--horizon", "20"]);
    assert_eq!(code(&o), 0);
    let text = fs::read_to_string(d.path().join("out/path.csv")).unwrap();
    let last = text.lines().last().unwrap();
    let h: f64 = last.split(',').nth(2).unwrap().parse().unwrap();
    assert!((h - 1.05f64.powi(20)).abs() < 1e-12);
    assert!(String::from_utf8_lossy(&o.stdout).contains("SustainedGrowth"));
}

#[test]
fn sweep_flags_the_discount_condition() {
    let d = TempDir::new().unwrap();
    let o = run(d.path(), "verify.samples = 2000\n", &["sweep"]);
    assert_eq!(code(&o), 0);
    let text = fs::read_to_string(d.path().join("out/sweep.csv")).unwrap();
    let status: Vec<&str> = text.lines().skip(1).map(|l| l.split(',').nth(2).unwrap()).collect();
    assert_eq!(status, ["pass", "pass", "fail"]);
}

#[test]
fn transform_agrees_with_direct_solve() {
    let d = TempDir::new().unwrap();
    let cfg = "model.gamma = 0.35\ngrid.k_nodes = 6\ngrid.h_nodes = 6\n";
    let o = run(d.path(), cfg, &["transform"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8_lossy(&o.stdout);
    let gap: f64 = stdout
        .lines()
        .find_map(|l| l.strip_prefix("max relative gap on interior nodes: "))
        .unwrap()
        .parse()
        .unwrap();
    assert!(gap <= 1e-2, "{gap}");
    assert_eq!(rows(&d.path().join("out/transform.csv")), 36);
}

#[test]
fn malformed_config_is_an_input_error() {
    let d = TempDir::new().unwrap();
    assert_eq!(code(&run(d.path(), "model.beta = \"high\"\n", &["check"])), 4);
    assert_eq!(code(&run(d.path(), "model.alpha = 1.5\n", &["check"])), 4);
    assert_eq!(code(&run(d.path(), "grid.k_nodes = 2\n", &["solve"])), 4);
}

#[test]
fn outputs_are_deterministic() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    for d in [&a, &b] {
        assert_eq!(code(&run(d.path(), "grid.k_nodes = 5\ngrid.h_nodes = 5\n", &["solve"])), 0);
        assert_eq!(code(&run(d.path(), "verify.samples = 5000\n", &["check", "--seed", "7"])), 0);
    }
    for f in ["value.csv", "policy.csv", "diagnostics.json", "report.json"] {
        let (x, y) = (a.path().join("out").join(f), b.path().join("out").join(f));
        assert_eq!(fs::read(x).unwrap(), fs::read(y).unwrap(), "{f}");
    }
}

#[test]
fn config_round_trips() {
    let d = TempDir::new().unwrap();
    let o = run(d.path(), "model.theta = -1.0\nsweep.values = [0.5, 0.6]\n", &["config"]);
    assert_eq!(code(&o), 0);
    let flat = String::from_utf8(o.stdout).unwrap();
    assert!(flat.contains("model.theta = -1.0\n"));
    let again = run(d.path(), &flat, &["config"]);
    assert_eq!(String::from_utf8(again.stdout).unwrap(), flat);
}
