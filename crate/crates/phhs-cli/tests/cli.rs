use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(dir: &Path, verb: &str, config: &str, extra: &[&str]) -> Output {
    let cfg = dir.join(format!("{verb}.json"));
    std::fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_phhs"))
        .arg(verb)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .args(extra)
        .env("PHHS_THREADS", "2")
        .output()
        .unwrap()
}

fn summary(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("out/summary.json")).unwrap()).unwrap()
}

#[test]
fn integrability_scan_flags_proper_example() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), "integrability-scan", r#"{"model": {"kind": "proper", "f": "1", "h": "exp(x1)"}}"#, &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let s = summary(dir.path());
    assert_eq!(s["results"]["flag"], "proper");
    let c = &s["results"]["d_omega_i_at_center"][0];
    assert_eq!(c["component"], "x1x2y1");
    assert!((c["value"].as_f64().unwrap() - 1.0).abs() < 1e-4);
    // Echoed config has defaults filled in.
    assert_eq!(s["config"]["model"]["h_r"], "-y1");
    assert_eq!(s["config"]["scan"]["n"], 5);
    let csv = std::fs::read_to_string(dir.path().join("out/scan.csv")).unwrap();
    assert_eq!(csv.lines().count(), 626);
}

#[test]
fn monodromy_flips_sign() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), "monodromy", "{}", &[]);
    assert_eq!(out.status.code(), Some(0));
    let s = summary(dir.path());
    assert_eq!(s["results"]["sheet"], "sign-flipped");
    assert!(s["results"]["distance_to_negated_start"].as_f64().unwrap() < 1e-5);
}

#[test]
fn outputs_are_deterministic() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let cfg = r#"{"grid": {"nt": 5, "ns": 5}}"#;
    run(a.path(), "integrate", cfg, &[]);
    run(b.path(), "integrate", cfg, &[]);
    for f in ["grid.csv", "summary.json"] {
        let (x, y) = (std::fs::read(a.path().join("out").join(f)).unwrap(), std::fs::read(b.path().join("out").join(f)).unwrap());
        // The config path is not echoed, so the summaries match byte for byte.
        assert_eq!(x, y, "{f}");
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(run(d, "integrate", r#"{"grid": {"nt": 0, "ns": 0}}"#, &[]).status.code(), Some(3));
    assert_eq!(run(d, "integrate", r#"{"model": {"kind": "standard", "hamiltonian": "P^2 +* Q"}}"#, &[]).status.code(), Some(3));
    assert_eq!(run(d, "integrate", "not json", &[]).status.code(), Some(3));
    assert_eq!(run(d, "foliate", "{}", &[]).status.code(), Some(3));
    // A tiny step budget makes the integrator give up.
    assert_eq!(run(d, "integrate", r#"{"flow": {"max_step_count": 3}}"#, &[]).status.code(), Some(4));
    // Squeezing every tolerance turns passing checks into failures.
    assert_eq!(run(d, "morse-period", "{}", &["--tolerance-scale", "1e-20"]).status.code(), Some(2));
}

#[test]
fn connection_check_on_flat_and_holomorphic_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"connection": {"metric": [["1", "0"], ["0", "x1^2"]], "points": [[1.5, 0.2, 0.3, -0.4]], "holomorphic": {}}}"#;
    let out = run(dir.path(), "connection-check", cfg, &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let s = summary(dir.path());
    assert_eq!(s["results"]["flat"], true);
    assert!(s["results"]["holomorphic"]["max_difference"].as_f64().unwrap() <= 1e-5);
}

#[test]
fn shipped_scenarios_pass() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios");
    for (file, verb) in [
        ("integrate-central", "integrate"),
        ("foliate-central", "foliate"),
        ("monodromy-central", "monodromy"),
        ("action-proper", "action-check"),
        ("scan-proper", "integrability-scan"),
        ("deform", "deform"),
        ("morse", "morse-period"),
        ("connection", "connection-check"),
    ] {
        let dest = tempfile::tempdir().unwrap();
        let out = Command::new(env!("CARGO_BIN_EXE_phhs"))
            .args([verb, "--config"])
            .arg(dir.join(format!("{file}.json")))
            .arg("--out")
            .arg(dest.path())
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0), "{file}: {}", String::from_utf8_lossy(&out.stdout));
    }
}
