use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bo-lab"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn small(epsilon: &str, extra: &str) -> String {
    format!(
        r#"{{"N": 1, "E_m": 0.1, "E_M": 1.0, "epsilon": {epsilon},
            "perturbation": {{"kind": "gassot"}},
            "initial": {{"poisson": [{{"r": 0.5}}]}},
            "M": 32, "dt": 0.002, "T": 0.4, "sampleStride": 50, "nMax": 4{extra}}}"#
    )
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn simulate_writes_outputs_and_manifest() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_config(d.path(), "c.json", &small("[0.0]", ""));
    let out = d.path().join("run");
    let o = run(&["simulate", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("H_BO relative drift"));
    let m = read_json(&out.join("manifest.json"));
    assert_eq!(m["command"], "simulate");
    assert_eq!(m["status"], "ok");
    assert_eq!(m["config"]["M"], 32);
    assert!(m["wall_time_s"].as_f64().unwrap() >= 0.0);
    assert!(m["version"].is_string());
    let csv = std::fs::read_to_string(out.join("trajectory.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "t,H_BO,momentum,P_value,H_total");
    // t = 0, 0.1, ..., 0.4
    assert_eq!(csv.lines().count(), 1 + 5);
    assert_eq!(std::fs::read_dir(out.join("coeffs")).unwrap().count(), 5);
}

#[test]
fn simulate_and_actions_are_deterministic_and_rerunnable_from_manifest() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_config(d.path(), "c.json", &small("[0.01]", ""));
    let (a, b, c) = (d.path().join("a"), d.path().join("b"), d.path().join("c"));
    for out in [&a, &b] {
        let o = run(&["simulate", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert_eq!(code(&o), 0);
        let o = run(&["actions", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--quiet"]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        assert!(o.stdout.is_empty());
    }
    let manifest = a.join("manifest.json");
    assert_eq!(code(&run(&["simulate", "--config", manifest.to_str().unwrap(), "--out", c.to_str().unwrap()])), 0);
    let bytes = |p: &Path, f: &str| std::fs::read(p.join(f)).unwrap();
    assert_eq!(bytes(&a, "trajectory.csv"), bytes(&b, "trajectory.csv"));
    assert_eq!(bytes(&a, "trajectory.csv"), bytes(&c, "trajectory.csv"));
    assert_eq!(bytes(&a, "actions.csv"), bytes(&b, "actions.csv"));

    let actions = std::fs::read_to_string(a.join("actions.csv")).unwrap();
    assert_eq!(
        actions.lines().next().unwrap(),
        "t,gamma_1,gamma_2,gamma_3,gamma_4,tail_energy,h_omega,H4,max_drift,residual"
    );
    let s = read_json(&a.join("actions_summary.json"));
    for k in ["max_drift", "tail_max", "h_omega_max", "H4_max"] {
        assert!(s[k].is_number(), "{k}");
    }
    assert!(s["max_drift"].as_f64().unwrap() < 1e-6);
}

#[test]
fn actions_without_inputs_is_a_runtime_error() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_config(d.path(), "c.json", &small("[0.01]", ""));
    let o = run(&["actions", "--config", cfg.to_str().unwrap(), "--out", d.path().join("none").to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("coefficient dumps"));
}

#[test]
fn config_errors_exit_with_two() {
    let d = tempfile::tempdir().unwrap();
    let bad = write_config(d.path(), "bad.json", &small("[0.01]", "").replace("\"dt\": 0.002", "\"dt\": -1"));
    let o = run(&["simulate", "--config", bad.to_str().unwrap(), "--out", d.path().to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("dt"));
    assert_eq!(code(&run(&["simulate"])), 2);
    let garbage = write_config(d.path(), "g.json", "{ not json");
    assert_eq!(code(&run(&["certificate", "--config", garbage.to_str().unwrap()])), 2);
    let single = write_config(d.path(), "s.json", &small("[0.01]", ""));
    assert_eq!(code(&run(&["sweep", "--config", single.to_str().unwrap(), "--out", d.path().to_str().unwrap()])), 2);
}

#[test]
fn blowup_is_recorded_in_the_manifest() {
    let d = tempfile::tempdir().unwrap();
    let body = small("[0.0]", "")
        .replace("\"r\": 0.5", "\"r\": 0.95")
        .replace("\"dt\": 0.002", "\"dt\": 0.2")
        .replace("\"T\": 0.4", "\"T\": 20.0");
    let cfg = write_config(d.path(), "c.json", &body);
    let o = run(&["simulate", "--config", cfg.to_str().unwrap(), "--out", d.path().to_str().unwrap()]);
    assert_eq!(code(&o), 1, "{}", String::from_utf8_lossy(&o.stdout));
    let m = read_json(&d.path().join("manifest.json"));
    assert_eq!(m["status"], "blowup");
    let t = m["blowup_time"].as_f64().unwrap();
    assert!(t > 0.0 && t <= 20.0);
}

#[test]
fn certificate_prints_every_flag() {
    let d = tempfile::tempdir().unwrap();
    let body = small("[1e-4, 1e-2]", "").replace(r#""poisson": [{"r": 0.5}]"#, r#""targetGaps": {"gaps": [0.318]}"#);
    let cfg = write_config(d.path(), "c.json", &body);
    let o = run(&["certificate", "--config", cfg.to_str().unwrap(), "--out", d.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let c = read_json(&d.path().join("certificate.json"));
    assert_eq!(c["q"], 3);
    assert_eq!(c["Q"], 10.0);
    let stdout = String::from_utf8_lossy(&o.stdout);
    for f in c["hypothesis_flags"].as_array().unwrap() {
        assert!(stdout.contains(f["name"].as_str().unwrap()));
    }
    assert_eq!(read_json(&d.path().join("certificates.json")).as_array().unwrap().len(), 2);
}

#[test]
fn sweep_reports_per_epsilon_and_rejects_degenerate_fits() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_config(d.path(), "c.json", &small("[1e-2, 1e-3, 1e-4]", ""));
    let out = d.path().join("sweep");
    let o =
        run(&["sweep", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--jobs", "2", "--quiet"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = read_json(&out.join("sweep_report.json"));
    assert_eq!(r["runs"].as_array().unwrap().len(), 3);
    assert!(r["slopes"]["drift"].as_f64().unwrap() > 0.25);
    assert!(r["bound_check"]["monotone"].as_bool().unwrap());
    for i in 0..3 {
        assert!(out.join(format!("eps_{i}/actions.csv")).is_file());
    }

    let same = write_config(d.path(), "same.json", &small("[1e-3, 1e-3, 1e-3]", ""));
    let o = run(&["sweep", "--config", same.to_str().unwrap(), "--out", out.to_str().unwrap(), "--quiet"]);
    assert_eq!(code(&o), 0);
    let r = read_json(&out.join("sweep_report.json"));
    assert!(r["slopes"]["drift"].is_null());
    assert!(r["notes"].as_array().unwrap().iter().any(|n| n.as_str().unwrap().contains("DegenerateSweep")));
}

#[test]
fn validate_fast_subset_and_corrupted_tolerance() {
    let o = run(&["validate"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(String::from_utf8_lossy(&o.stdout).matches("[PASS]").count(), 5);

    let o = run(&["validate", "--criteria", "2", "--tolerance", "expansion=0"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("expansion identity"));

    let o = run(&["validate", "--criteria", "1,10"]);
    assert_eq!(code(&o), 0);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(stdout.lines().count(), 2);
    assert!(stdout.contains("criterion  1") && stdout.contains("criterion 10"));

    assert_eq!(code(&run(&["validate", "--tolerance", "bogus=1"])), 2);
    assert_eq!(code(&run(&["validate", "--criteria", "11"])), 2);
}
