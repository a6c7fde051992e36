//! The `swarm-sim` binary: artifacts, CSV layout, reproducibility and exit
//! codes.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use swarm_impedance::harness::metrics::CSV_COLUMNS;

const BIN: &str = env!("CARGO_BIN_EXE_swarm-sim");

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn run(config: &Path, mode: &str, out: &Path, extra: &[&str]) -> Output {
    Command::new(BIN)
        .arg("--config")
        .arg(config)
        .args(["--mode", mode, "--out"])
        .arg(out)
        .args(extra)
        .output()
        .expect("spawn swarm-sim")
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("scenario.toml");
    fs::write(&path, body).unwrap();
    path
}

const SMALL: &str = "n_robots = 4\npotential.delta_s = 5\npotential.delta_d = 15\npotential.R = 22\n";

#[test]
fn writes_artifacts_with_fixed_columns() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&config("reference_n16.toml"), "tunable", dir.path(), &["--steps", "500"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("passivity scaled: PASS"));

    let csv = fs::read_to_string(dir.path().join("metrics.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), CSV_COLUMNS.join(","));
    assert_eq!(lines.count(), 501);
    assert!(dir.path().join("summary.txt").exists());
    let echo = fs::read_to_string(dir.path().join("config.toml")).unwrap();
    assert!(echo.contains("n_robots = 16"));
}

#[test]
fn same_seed_gives_identical_csv() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let out = run(&config("reference_n16.toml"), "tunable-from-nominal", dir.path(), &["--steps", "800", "--seed", "3"]);
        assert_eq!(out.status.code(), Some(0));
    }
    let read = |d: &tempfile::TempDir| fs::read(d.path().join("metrics.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
}

#[test]
fn full_state_appends_robot_blocks() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = run(&cfg, "nominal", &dir.path().join("out"), &["--steps", "10", "--full-state"]);
    assert_eq!(out.status.code(), Some(0));
    let csv = fs::read_to_string(dir.path().join("out/metrics.csv")).unwrap();
    let header: Vec<&str> = csv.lines().next().unwrap().split(',').collect();
    assert_eq!(header.len(), CSV_COLUMNS.len() + 4 * 6);
    assert_eq!(&header[CSV_COLUMNS.len()..CSV_COLUMNS.len() + 6], ["x_1", "y_1", "z_1", "vx_1", "vy_1", "vz_1"]);
    assert!(csv.lines().skip(1).all(|l| l.split(',').count() == header.len()));
}

/// `cost_f` is `-1` exactly on rows without contact and non-negative
/// otherwise.
#[test]
fn cost_sentinel_marks_rows_without_contact() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&config("reference_n16.toml"), "tunable", dir.path(), &["--seed", "8"]);
    assert_eq!(out.status.code(), Some(0));
    let csv = fs::read_to_string(dir.path().join("metrics.csv")).unwrap();
    let (mut with, mut without) = (0, 0);
    for line in csv.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let cost: f64 = f[2].parse().unwrap();
        if f[1] == "-1" {
            assert_eq!(cost, -1.0);
            without += 1;
        } else {
            assert!(cost >= 0.0, "{line}");
            with += 1;
        }
    }
    assert!(with > 0 && without > 0);
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "n_robots = 4\npotential.delta_s = 5\npotential.delta_d = 15\n");
    let out = run(&cfg, "nominal", &dir.path().join("out"), &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("potential.R"));

    let cfg = write_config(dir.path(), &format!("{SMALL}time.horizon = 0\n"));
    assert_eq!(run(&cfg, "nominal", &dir.path().join("out"), &[]).status.code(), Some(2));

    let out = run(&config("reference_n16.toml"), "stiff", &dir.path().join("out"), &[]);
    assert_eq!(out.status.code(), Some(2));
    let out = Command::new(BIN).arg("--mode").arg("nominal").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn barrier_breach_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("{SMALL}drive.magnitude = 30\ntime.horizon = 5\n"));
    let out = run(&cfg, "nominal", &dir.path().join("out"), &[]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("safety barrier"));
}

/// A stiff swarm that starts with potential energy and an obstacle inside
/// its reach can push more than its initial kinetic energy into the
/// obstacle; the scaled certificate fails on this in-bounds run.
#[test]
fn failed_scaled_certificate_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let body = fs::read_to_string(config("reference_n64.toml"))
        .unwrap()
        .replace("obstacle.clearance = 1", "obstacle.offset = 33")
        .replace("init.box_side = 36", "");
    let cfg = write_config(dir.path(), &body);
    let out = run(&cfg, "nominal", &dir.path().join("out"), &["--seed", "1", "--steps", "300"]);
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = fs::read_to_string(dir.path().join("out/summary.txt")).unwrap();
    assert!(summary.contains("passivity unscaled: PASS"));
    assert!(summary.contains("passivity scaled: FAIL"));
}
