use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn run(dir: &Path, args: &[&str], config: &str) -> Output {
    let path = dir.join("config.json");
    fs::write(&path, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_scatter"))
        .args(args)
        .arg("--config")
        .arg(&path)
        .arg("--out")
        .arg(dir.join("out"))
        .env_remove("SCATTER_CACHE_DIR")
        .output()
        .expect("binary runs")
}

fn code(output: &Output) -> i32 {
    output.status.code().expect("exit code")
}

const ZERO_SMALL: &str = r#"{
  "potential": {"kind": "zero"},
  "grid": {"radius": 8, "points": 32},
  "lambda_grid": {"kind": "points", "points": [[0.5, 0.0], [2.0, 0.0], [0.0, 1.0], [0.3, 0.4]]}
}"#;

#[test]
fn zero_potential_scan_is_trivial_and_round_trips() {
    let dir = TempDir::new().unwrap();
    let out = run(dir.path(), &["scan"], ZERO_SMALL);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(dir.path().join("out/scattering.json")).unwrap();
    let data = scatter_core::ScatteringData::from_json(&text).unwrap();
    assert_eq!(data.len(), 4);
    for i in 0..data.len() {
        assert_eq!(data.a[i].unwrap().norm(), 0.0);
        assert_eq!(data.b[i].unwrap().norm(), 0.0);
        assert_eq!(data.delta[i].as_ref().unwrap().value.re, 1.0);
    }
    // Re-serializing the parsed file reproduces it byte for byte.
    assert_eq!(data.to_json().unwrap(), text);
    assert!(dir.path().join("out/scattering.csv").exists());
    assert!(dir.path().join("out/determinant.csv").exists());
}

#[test]
fn odd_grid_is_fatal() {
    let dir = TempDir::new().unwrap();
    let out = run(dir.path(), &["scan"], r#"{"grid": {"radius": 8, "points": 33}}"#);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
}

#[test]
fn unknown_key_is_reported_with_its_line() {
    let dir = TempDir::new().unwrap();
    let out = run(dir.path(), &["scan"], "{\n  \"grid\": {\"radius\": 8, \"points\": 32},\n  \"bogus\": true\n}");
    assert_eq!(code(&out), 1);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("config.json:3:"), "{stderr}");
    assert!(stderr.contains("bogus"), "{stderr}");
}

#[test]
fn aliased_samples_give_partial_exit() {
    let dir = TempDir::new().unwrap();
    let config = r#"{
      "grid": {"radius": 8, "points": 32},
      "determinant": false,
      "lambda_grid": {"kind": "points", "points": [[0.5, 0.0], [5.0, 0.0]]}
    }"#;
    let out = run(dir.path(), &["scan"], config);
    assert_eq!(code(&out), 2, "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(dir.path().join("out/scattering.json")).unwrap();
    let data = scatter_core::ScatteringData::from_json(&text).unwrap();
    assert!(data.b[0].is_some());
    assert!(data.b[1].is_none());
    assert!(data.a[1].is_some());
}

#[test]
fn vacuum_verification_passes() {
    let dir = TempDir::new().unwrap();
    let config = r#"{
      "potential": {"kind": "zero"},
      "grid": {"radius": 8, "points": 32},
      "lambda_grid": {"kind": "annuli", "radii": [0.3, 0.6, 1.6666666666666667, 3.3333333333333335], "phases": 4, "circle_samples": 8},
      "checks": {"select": ["ab-on-t", "delta", "b-symmetry", "a-limit", "green-circle", "soliton", "transparency", "dbar-a"]}
    }"#;
    let out = run(dir.path(), &["verify"], config);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(code(&out), 0, "{stdout}\n{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout.contains("overall: PASS"));
    let report: scatter_core::VerificationReport =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/report.json")).unwrap()).unwrap();
    assert!(report.passed);
    assert!(report.records.iter().any(|r| r.id == "ab/on-T"));
    assert!(dir.path().join("out/report.txt").exists());
}

#[test]
fn soliton_demo_is_reproducible_and_seeded() {
    let dir = TempDir::new().unwrap();
    let out = run(dir.path(), &["demo-soliton", "--seed", "11"], "{}");
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8_lossy(&out.stdout).contains("PASS"));
    let first = fs::read(dir.path().join("out/report.json")).unwrap();
    run(dir.path(), &["demo-soliton", "--seed", "11"], "{}");
    assert_eq!(fs::read(dir.path().join("out/report.json")).unwrap(), first);
    // The configured seed is overridden by the flag.
    let out = run(dir.path(), &["demo-soliton", "--seed", "12"], r#"{"seed": 11}"#);
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8_lossy(&fs::read(dir.path().join("out/report.json")).unwrap()).contains("seed = 12"));
}

#[test]
fn export_writes_plot_data() {
    let dir = TempDir::new().unwrap();
    assert_eq!(code(&run(dir.path(), &["scan"], ZERO_SMALL)), 0);
    let out = run(dir.path(), &["export"], ZERO_SMALL);
    assert_eq!(code(&out), 0);
    let potential = fs::read_to_string(dir.path().join("out/potential.csv")).unwrap();
    assert_eq!(potential.lines().count(), 1 + 32 * 32);
    assert!(dir.path().join("out/radial_profile.csv").exists());
}

#[test]
fn cached_scan_is_reused() {
    let dir = TempDir::new().unwrap();
    let cache = dir.path().join("cache");
    let config = dir.path().join("config.json");
    fs::write(&config, ZERO_SMALL).unwrap();
    let scan = |out: &str| {
        Command::new(env!("CARGO_BIN_EXE_scatter"))
            .args(["scan", "--config"])
            .arg(&config)
            .arg("--out")
            .arg(dir.path().join(out))
            .env("SCATTER_CACHE_DIR", &cache)
            .output()
            .unwrap()
    };
    assert_eq!(code(&scan("first")), 0);
    assert!(fs::read_dir(&cache).unwrap().count() > 0);
    assert_eq!(code(&scan("second")), 0);
    assert_eq!(
        fs::read(dir.path().join("first/scattering.json")).unwrap(),
        fs::read(dir.path().join("second/scattering.json")).unwrap()
    );
}
