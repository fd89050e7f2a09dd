use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn rydgate(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rydgate"))
        .args(args)
        .current_dir(cwd)
        .output()
        .unwrap()
}

fn ok(args: &[&str], cwd: &Path) -> String {
    let out = rydgate(args, cwd);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn waveform_phase_jumps_by_pi_at_tau() {
    let dir = TempDir::new().unwrap();
    let csv = ok(&["waveform"], dir.path());
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "t_ns,omega_2pi_mhz,delta_2pi_mhz,phi_rad");
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    let before = rows.iter().rev().find(|r| r[0] < 250.0).unwrap();
    let after = rows.iter().find(|r| r[0] > 250.0).unwrap();
    let jump = after[3] - before[3];
    assert!((jump.abs() - PI).abs() < 0.05, "jump {jump}");
    assert!(rows.iter().all(|r| (r[1] - 4.0).abs() < 1e-12));
}

#[test]
fn gate_json_reports_cz() {
    let dir = TempDir::new().unwrap();
    ok(&["gate", "--format", "json", "--out", "g.json"], dir.path());
    let g = json(&dir.path().join("g.json"));
    assert!(g["fidelity"].as_f64().unwrap() >= 0.9999);
    for key in ["phi_01", "phi_10", "phi_11"] {
        assert!((g[key].as_f64().unwrap() - PI).abs() < 1e-2);
    }
    let meta = json(&dir.path().join("g.json.meta.json"));
    assert_eq!(meta["command"], "gate");
    assert!(meta["content_hash"].as_str().unwrap().starts_with("sha256:"));
}

#[test]
fn qft_timing_closed_form() {
    let dir = TempDir::new().unwrap();
    let out = ok(&["qft-timing", "--n", "8"], dir.path());
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    let entries = v.as_array().unwrap();
    assert!(!entries.is_empty());
    for e in entries {
        assert_eq!(e["t_total_cyclic"].as_f64().unwrap(), 8.0 * 250.0 + 750.0 * 28.0);
        assert!(e["t_total_ncgc"].as_f64().unwrap() < 8.0 * 250.0 + 750.0 * 28.0);
    }
}

#[test]
fn bad_config_exits_with_json_error() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("bad.toml"), "[physical]\nomega = \"4 ghz\"\n").unwrap();
    let out = rydgate(&["--config", "bad.toml", "gate"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "config");
    assert!(err["message"].as_str().unwrap().contains("physical.omega"));

    fs::write(dir.path().join("unknown.toml"), "[physical]\nomegaa = \"4 mhz_2pi\"\n").unwrap();
    assert_eq!(
        rydgate(&["--config", "unknown.toml", "gate"], dir.path()).status.code(),
        Some(2)
    );
}

#[test]
fn sidecar_config_reproduces_output() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    ok(
        &[
            "--protocol",
            "pm",
            "--trials",
            "2",
            "--seed",
            "7",
            "sweep-noise",
            "--out",
            "a.csv",
        ],
        d,
    );
    let meta = json(&d.join("a.csv.meta.json"));
    fs::write(d.join("replay.json"), meta["config"].to_string()).unwrap();
    ok(&["--config", "replay.json", "sweep-noise", "--out", "b.csv"], d);
    let (a, b) = (fs::read(d.join("a.csv")).unwrap(), fs::read(d.join("b.csv")).unwrap());
    assert_eq!(a, b);
    assert_eq!(meta["content_hash"], json(&d.join("b.csv.meta.json"))["content_hash"]);
}

#[test]
fn seeded_sweeps_are_identical_across_thread_counts() {
    let dir = TempDir::new().unwrap();
    let args = ["--trials", "3", "--seed", "42", "sweep-noise"];
    let a = ok(&args, dir.path());
    let b = ok(&[&["--threads", "1"], &args[..]].concat(), dir.path());
    assert_eq!(a, b);
    assert!(a.starts_with("protocol,"));
}
