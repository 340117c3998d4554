//! End-to-end checks of the `relaxed-hjb` binary: artifact schemas,
//! deterministic re-runs, exit-code semantics and flag handling.

use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_relaxed-hjb"))
}

fn tmp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("relaxed-hjb-cli-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("config.txt");
    std::fs::write(&path, body).unwrap();
    path
}

const SMALL: &str = "\
[problem]
name = uniform-f
K = 3

[grid]
nodes = 101

[sweep]
eps = 0.2, 0.1

[mc]
paths = 500
dt = 0.001
";

#[test]
fn help_exits_zero() {
    let out = bin().arg("--help").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("sweep-eps"));
}

#[test]
fn unknown_flag_and_missing_config_exit_one() {
    let out = bin().args(["solve", "--bogus"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let out = bin().arg("solve").output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let out = bin()
        .args(["solve", "--config", "/nonexistent/config.txt"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn config_parse_error_names_the_line() {
    let dir = tmp_dir("parse-error");
    let cfg = write_config(&dir, "[problem]\nname = uniform-f\nwhat = 1\n");
    let out = bin()
        .args(["solve", "--config", cfg.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 3"), "stderr: {err}");
}

#[test]
fn sweep_eps_emits_documented_header() {
    let dir = tmp_dir("header");
    let cfg = write_config(&dir, SMALL);
    let out_dir = dir.join("out");
    let out = bin()
        .args([
            "sweep-eps",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(out_dir.join("eps_sweep.csv")).unwrap();
    assert!(csv.starts_with("eps,sup_gap,bound_rhs,monotone_ok,c2beta_gap\n"));
    let manifest = std::fs::read_to_string(out_dir.join("manifest.json")).unwrap();
    assert!(manifest.contains("\"config_hash\""));
    assert!(manifest.contains("\"timestamp\""));
}

#[test]
fn solve_reruns_are_byte_identical() {
    let dir = tmp_dir("determinism");
    let cfg = write_config(&dir, SMALL);
    for sub in ["solve", "mc-verify"] {
        let (a, b) = (dir.join(format!("{sub}-a")), dir.join(format!("{sub}-b")));
        for out_dir in [&a, &b] {
            let out = bin()
                .args([
                    sub,
                    "--config",
                    cfg.to_str().unwrap(),
                    "--out",
                    out_dir.to_str().unwrap(),
                    "--seed",
                    "7",
                ])
                .output()
                .unwrap();
            assert_eq!(out.status.code(), Some(0), "{sub} failed");
        }
        for entry in std::fs::read_dir(&a).unwrap() {
            let name = entry.unwrap().file_name();
            if name.to_string_lossy().ends_with(".csv") {
                let bytes_a = std::fs::read(a.join(&name)).unwrap();
                let bytes_b = std::fs::read(b.join(&name)).unwrap();
                assert_eq!(bytes_a, bytes_b, "{sub}: {name:?} differs between runs");
            }
        }
    }
}

#[test]
fn mc_verify_flags_coarse_steps_with_exit_two() {
    // a deliberately coarse time step biases the exit functional well past
    // 3 standard errors once enough paths shrink the noise floor
    let dir = tmp_dir("exit-two");
    let cfg = write_config(
        &dir,
        "[problem]\nname = uniform-f\nK = 2\n\n[grid]\nnodes = 101\n\n\
         [sweep]\neps = 0.1\n\n[mc]\npaths = 60000\ndt = 0.02\n",
    );
    let out_dir = dir.join("out");
    let out = bin()
        .args([
            "mc-verify",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
            "--threads",
            "4",
        ])
        .output()
        .unwrap();
    assert_eq!(
        out.status.code(),
        Some(2),
        "stdout: {} stderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = std::fs::read_to_string(out_dir.join("mc.csv")).unwrap();
    assert!(csv.starts_with("x0_1,pde_value,mc_mean,mc_stderr,z,n_paths,dt,seed\n"));
}

#[test]
fn surface_requires_three_actions() {
    let dir = tmp_dir("surface");
    let cfg = write_config(&dir, "[problem]\nname = two-action-gap\nK = 2\n");
    let out = bin()
        .args(["surface", "--config", cfg.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}
