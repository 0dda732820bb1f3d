use std::fs;
use std::path::Path;
use std::process::Command;

use serde_json::Value;
use tempfile::TempDir;

fn gardner(cmd: &str, config: &str, dir: &Path, extra: &[&str]) -> (i32, Value) {
    let cfg = dir.join(format!("{cmd}.cfg"));
    fs::write(&cfg, config).unwrap();
    let out = dir.join(cmd);
    let status = Command::new(env!("CARGO_BIN_EXE_gardner"))
        .arg(cmd)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .args(extra)
        .status()
        .unwrap();
    let report = fs::read_to_string(out.join("report.json"))
        .map(|t| serde_json::from_str(&t).unwrap())
        .unwrap_or(Value::Null);
    (status.code().unwrap(), report)
}

fn f(report: &Value, key: &str) -> f64 {
    report[key].as_f64().unwrap_or_else(|| panic!("missing {key} in {report}"))
}

#[test]
fn soliton_check_reports_peak_and_residuals() {
    let dir = TempDir::new().unwrap();
    let (code, r) = gardner("soliton-check", "grid.n = 2048\neigen.n = 256\n", dir.path(), &[]);
    assert_eq!(code, 0);
    assert!((f(&r, "peak") - 0.148528137).abs() < 1e-9);
    assert!(f(&r, "residual_second_order") < 1e-9);
    assert!(f(&r, "residual_first_integral") < 1e-9);
    assert!(f(&r, "lowest_eigenvalue") < 0.0);
    assert_eq!(r["config.sigma"], "0.35");
    let spectrum = fs::read_to_string(dir.path().join("soliton-check/spectrum.csv")).unwrap();
    assert_eq!(spectrum.lines().count(), 257);
}

#[test]
fn convexity_matches_closed_form() {
    let dir = TempDir::new().unwrap();
    let (code, r) = gardner("convexity", "convexity.points = 5\n", dir.path(), &[]);
    assert_eq!(code, 0);
    assert!(f(&r, "max_abs_err") <= 1e-4);
    assert!(f(&r, "min_d2_numeric") > 0.0);
    assert!((f(&r, "d2_closed_form") - 0.666087712).abs() < 1e-8);
}

#[test]
fn local_time_at_unit_norm() {
    let dir = TempDir::new().unwrap();
    let (code, r) = gardner("local-time", "local.norm = 1\n", dir.path(), &[]);
    assert_eq!(code, 0);
    assert!((f(&r, "time") - 0.015625).abs() < 1e-15);
    assert!((f(&r, "lambda0") - 4.0).abs() < 1e-12);
}

#[test]
fn evolve_writes_log_snapshots_and_final_state() {
    let dir = TempDir::new().unwrap();
    let cfg = "grid.n = 512\nt_end = 1\nlog_every = 50\nsnapshots = 0.5\n";
    let (code, r) = gardner("evolve", cfg, dir.path(), &[]);
    assert_eq!(code, 0);
    assert!(f(&r, "max_drift_mass") < 1e-10);
    let out = dir.path().join("evolve");
    let log = fs::read_to_string(out.join("run_log.csv")).unwrap();
    assert_eq!(log.lines().next().unwrap(), "t,mean,mass,energy,l2_error_vs_oracle");
    assert_eq!(log.lines().count(), 1 + 21);
    assert!(out.join("snapshot_000.csv").exists() && out.join("final.csv").exists());
}

#[test]
fn scaling_check_agrees_with_direct_run() {
    let dir = TempDir::new().unwrap();
    let (code, r) = gardner("scaling-check", "grid.n = 512\nt_end = 0.5\n", dir.path(), &[]);
    assert_eq!(code, 0);
    assert!(f(&r, "l2_difference") < 1e-10);
}

#[test]
fn xsb_sampling_is_deterministic_and_seeded() {
    let dir = TempDir::new().unwrap();
    let cfg = "xsb.count = 4\nxsb.s = 0.5\nxsb.kind = generic\nxsb.n = 64\nxsb.nt = 64\nxsb.estimate = trilinear\n";
    let read = |name: &str| fs::read(dir.path().join(name).join("xsb_trilinear.csv")).unwrap();
    assert_eq!(gardner("xsb-sample", cfg, dir.path(), &["--seed", "5"]).0, 0);
    let first = read("xsb-sample");
    assert_eq!(gardner("xsb-sample", cfg, dir.path(), &["--seed", "5"]).0, 0);
    assert_eq!(first, read("xsb-sample"));
    let (code, r) = gardner("xsb-sample", cfg, dir.path(), &["--seed", "6"]);
    assert_eq!(code, 0);
    assert_eq!(r["config.seed"], "6");
    assert_ne!(first, read("xsb-sample"));
}

#[test]
fn evolve_output_is_bit_identical_across_runs() {
    let dir = TempDir::new().unwrap();
    let cfg = "grid.n = 256\nt_end = 0.5\nperturbation.shape = noise\nperturbation.delta = 0.01\n";
    gardner("evolve", cfg, dir.path(), &["--seed", "11"]);
    let a = fs::read(dir.path().join("evolve/final.csv")).unwrap();
    gardner("evolve", cfg, dir.path(), &["--seed", "11"]);
    assert_eq!(a, fs::read(dir.path().join("evolve/final.csv")).unwrap());
}

#[test]
fn invalid_configs_exit_with_code_two() {
    let dir = TempDir::new().unwrap();
    for (cmd, cfg) in [
        ("local-time", "local.norm = -1\n"),
        ("local-time", "local.nrom = 1\n"),
        ("evolve", "sigma = abc\n"),
        ("evolve", "no equals sign\n"),
        ("evolve", "c0 = -1\n"),
        ("evolve", "dt = 10\n"),
        ("xsb-sample", "xsb.s = 0.1\n"),
        ("convexity", "convexity.c0_min = 2\nconvexity.c0_max = 1\n"),
    ] {
        assert_eq!(gardner(cmd, cfg, dir.path(), &[]).0, 2, "{cmd}: {cfg}");
    }
}

#[test]
fn lost_modulation_root_exits_with_code_three() {
    let dir = TempDir::new().unwrap();
    let cfg = "grid.n = 1024\nt_end = 20\nperturbation.shape = noise\nperturbation.delta = 3\n";
    let (code, r) = gardner("stability", cfg, dir.path(), &[]);
    assert_eq!(code, 3);
    assert_eq!(r["status"], "failed");
    assert!(r["failure"].as_str().unwrap().contains("root"));
}
