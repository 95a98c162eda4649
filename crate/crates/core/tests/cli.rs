use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn qds(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qds"))
        .args(args)
        .current_dir(dir)
        .env_remove("QDS_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn scenario(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn error_json(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    serde_json::from_str(text.lines().last().unwrap()).unwrap()
}

fn rows(csv: &str) -> Vec<(f64, String, f64)> {
    csv.lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].parse().unwrap(), f[1].to_string(), f[2].parse().unwrap())
        })
        .collect()
}

#[test]
fn list_presets_is_stable_and_complete() {
    let dir = TempDir::new().unwrap();
    let a = qds(dir.path(), &["list-presets"]);
    let b = qds(dir.path(), &["list-presets"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    for name in [
        "two-level",
        "oscillator",
        "kick-ring",
        "davies-qubit",
        "bloch-boltzmann-discrete",
        "spin-boson",
        "flat",
        "lorentzian",
        "ohmic-cubed-exp",
    ] {
        assert!(text.lines().any(|l| l.split_whitespace().nth(1) == Some(name)), "{name} missing");
    }
}

#[test]
fn two_level_evolve_matches_rate_equations() {
    let dir = TempDir::new().unwrap();
    let (down, up, delta) = (0.7, 0.2, 0.15);
    let body = format!(
        r#"{{"model": {{"preset": "two-level", "params": {{"omega": 1.3, "gamma_down": {down}, "gamma_up": {up}, "delta": {delta}}}}},
            "task": "evolve", "grid": {{"start": 0, "stop": 8, "points": 17}},
            "initial_state": "excited", "observables": ["p1", "sigma3", "coherence_12"],
            "output": {{"path": "out.csv"}}}}"#
    );
    let file = scenario(dir.path(), "s.json", &body);
    let out = qds(dir.path(), &["run", file.to_str().unwrap(), "--quiet"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stdout.is_empty());
    let csv = std::fs::read_to_string(dir.path().join("out.csv")).unwrap();
    assert!(csv.starts_with("t,observable_name,value\n"));
    let data = rows(&csv);
    assert_eq!(data.len(), 17 * 3);
    // populations relax at γ↓+γ↑ towards p₂ = γ↑/(γ↓+γ↑)
    let p2_inf = up / (down + up);
    for (t, name, v) in data {
        let p2 = p2_inf + (1.0 - p2_inf) * (-(down + up) * t).exp();
        let expect = match name.as_str() {
            "p1" => 1.0 - p2,
            "sigma3" => 2.0 * p2 - 1.0,
            "coherence_12" => 0.0,
            other => panic!("unexpected observable {other}"),
        };
        assert!((v - expect).abs() < 1e-10, "{name} at t={t}: {v} vs {expect}");
    }
}

#[test]
fn coherence_decays_at_half_relaxation_plus_dephasing() {
    let dir = TempDir::new().unwrap();
    let (down, up, delta) = (0.4, 0.1, 0.3);
    let body = format!(
        r#"{{"model": {{"preset": "two-level", "params": {{"omega": 2.0, "gamma_down": {down}, "gamma_up": {up}, "delta": {delta}}}}},
            "task": "evolve", "grid": [0.0, 0.5, 1.5, 4.0],
            "initial_state": "plus", "observables": ["coherence_12"],
            "output": {{"path": "coh.csv"}}}}"#
    );
    let file = scenario(dir.path(), "s.json", &body);
    assert!(qds(dir.path(), &["run", file.to_str().unwrap()]).status.success());
    let csv = std::fs::read_to_string(dir.path().join("coh.csv")).unwrap();
    let rate = (down + up) / 2.0 + 2.0 * delta;
    for (t, _, v) in rows(&csv) {
        assert!((v - 0.5 * (-rate * t).exp()).abs() < 1e-10);
    }
}

#[test]
fn unravel_is_reproducible_per_seed() {
    let dir = TempDir::new().unwrap();
    let file = scenario(
        dir.path(),
        "u.json",
        r#"{"model": {"preset": "two-level", "params": {"omega": 0.0, "gamma_down": 0.0, "delta": 0.5}},
            "task": "unravel", "grid": {"start": 0, "stop": 1, "points": 3},
            "initial_state": "plus", "options": {"dt": 0.01, "n_traj": 200}, "seed": 3,
            "output": {"path": "u.csv"}}"#,
    );
    let f = file.to_str().unwrap();
    let read = |name: &str| std::fs::read(dir.path().join(name)).unwrap();
    assert!(qds(dir.path(), &["run", f, "--out", "a"]).status.success());
    assert!(qds(dir.path(), &["run", f, "--out", "b"]).status.success());
    assert!(qds(dir.path(), &["run", f, "--out", "c", "--seed", "4"]).status.success());
    assert_eq!(read("a/u.csv"), read("b/u.csv"));
    assert_ne!(read("a/u.csv"), read("c/u.csv"));
    let text = String::from_utf8(read("a/u.csv")).unwrap();
    assert!(text.starts_with("t,re_1_1,im_1_1,se_1_1,"));
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn out_dir_comes_from_environment() {
    let dir = TempDir::new().unwrap();
    let file = scenario(
        dir.path(),
        "s.json",
        r#"{"model": {"preset": "two-level"}, "task": "evolve", "grid": [0, 1]}"#,
    );
    let out = Command::new(env!("CARGO_BIN_EXE_qds"))
        .args(["run", file.to_str().unwrap()])
        .current_dir(dir.path())
        .env("QDS_OUT_DIR", dir.path().join("env-out"))
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(dir.path().join("env-out/evolve.csv").exists());
}

#[test]
fn transposition_is_a_contract_violation() {
    let dir = TempDir::new().unwrap();
    let file = scenario(
        dir.path(),
        "t.json",
        r#"{"task": "cp-check",
            "superoperator": {"dim": 4, "re": [[1,0,0,0],[0,0,1,0],[0,1,0,0],[0,0,0,1]]},
            "output": {"path": "t.json", "format": "json"}}"#,
    );
    let out = qds(dir.path(), &["run", file.to_str().unwrap(), "--out", "res"]);
    assert_eq!(out.status.code(), Some(3));
    let err = error_json(&out);
    assert_eq!(err["error"]["exit_code"], 3);
    assert!((err["error"]["min_eigenvalue"].as_f64().unwrap() + 1.0).abs() < 1e-12);
    // the report is still written
    let report: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("res/t.json")).unwrap()).unwrap();
    assert!(report.is_object());
}

#[test]
fn exit_codes_separate_io_from_bad_input() {
    let dir = TempDir::new().unwrap();
    let missing = qds(dir.path(), &["run", "nope.json"]);
    assert_eq!(missing.status.code(), Some(1));

    let cases = [
        ("bad.json", "{ not json"),
        ("unknown-field.json", r#"{"task": "evolve", "model": {"preset": "two-level"}, "grid": [0, 1], "colour": 1}"#),
        ("unknown-preset.json", r#"{"task": "evolve", "model": {"preset": "three-level"}, "grid": [0, 1]}"#),
        ("empty-grid.json", r#"{"task": "evolve", "model": {"preset": "two-level"}, "grid": []}"#),
        ("negative-time.json", r#"{"task": "evolve", "model": {"preset": "two-level"}, "grid": [-1, 1]}"#),
        (
            "non-hermitian.json",
            r#"{"task": "evolve", "model": {"preset": "two-level"}, "grid": [0, 1],
                "observables": [{"name": "x", "matrix": {"dim": 2, "re": [[0, 1], [0, 0]]}}]}"#,
        ),
    ];
    for (name, body) in cases {
        let file = scenario(dir.path(), name, body);
        let out = qds(dir.path(), &["validate", file.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(2), "{name}");
        let err = error_json(&out);
        assert_eq!(err["error"]["exit_code"], 2, "{name}");
    }
    let unknown = error_json(&qds(dir.path(), &["validate", "unknown-preset.json"]));
    assert_eq!(unknown["error"]["kind"], "unknown-preset");
    assert_eq!(qds(dir.path(), &["frobnicate"]).status.code(), Some(2));
}

#[test]
fn validate_does_not_write() {
    let dir = TempDir::new().unwrap();
    let file = scenario(
        dir.path(),
        "s.json",
        r#"{"model": {"preset": "two-level"}, "task": "evolve", "grid": [0, 1], "output": {"path": "x.csv"}}"#,
    );
    let out = qds(dir.path(), &["validate", file.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(!dir.path().join("x.csv").exists());
}

#[test]
fn shipped_scenarios_validate() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    let dir = TempDir::new().unwrap();
    let mut seen = 0;
    for entry in std::fs::read_dir(&root).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "json") {
            let out = qds(dir.path(), &["validate", path.to_str().unwrap()]);
            assert!(out.status.success(), "{}: {}", path.display(), String::from_utf8_lossy(&out.stderr));
            seen += 1;
        }
    }
    assert!(seen >= 5);
}
