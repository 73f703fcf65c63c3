use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const SHORT_PASS: &str = "pass.pass_duration_s = 20\nreconcile.block_len = 46080\n";

fn satqkd(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_satqkd"))
        .args(args)
        .arg("--out")
        .arg(dir.join("out"))
        .output()
        .expect("binary runs")
}

fn config(dir: &Path, body: &str) -> String {
    let p = dir.join("run.toml");
    fs::write(&p, body).unwrap();
    p.display().to_string()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn run_ok(args: &[&str], dir: &Path) {
    let o = satqkd(args, dir);
    assert_eq!(code(&o), 0, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn unknown_strategy_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let o = satqkd(&["reconcile", "--strategy", "magic"], dir.path());
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("magic"));
}

#[test]
fn unknown_key_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let cfg = config(dir.path(), "detector.pz = 0.9\n");
    let o = satqkd(&["simulate-pass", "--config", &cfg], dir.path());
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("detector.pz"));
}

#[test]
fn out_of_range_scale_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    assert_eq!(code(&satqkd(&["simulate-pass", "--scale", "1.5"], dir.path())), 2);
}

#[test]
fn missing_inputs_exit_three() {
    let dir = TempDir::new().unwrap();
    assert_eq!(code(&satqkd(&["simulate-qkd"], dir.path())), 3);
    assert_eq!(code(&satqkd(&["reconcile"], dir.path())), 3);
    assert_eq!(code(&satqkd(&["skl-report"], dir.path())), 3);
}

#[test]
fn missing_config_file_exits_three() {
    let dir = TempDir::new().unwrap();
    let o = satqkd(&["simulate-pass", "--config", "/nonexistent/run.toml"], dir.path());
    assert_eq!(code(&o), 3);
}

#[test]
fn zero_length_pass_gives_empty_outputs() {
    let dir = TempDir::new().unwrap();
    let cfg = config(dir.path(), "pass.pass_duration_s = 0\n");
    run_ok(&["simulate-pass", "--config", &cfg, "--scale", "0.02"], dir.path());
    run_ok(&["simulate-qkd", "--config", &cfg, "--scale", "0.02"], dir.path());
    let out = dir.path().join("out");
    let budget = fs::read_to_string(out.join("budget.csv")).unwrap();
    assert_eq!(budget.lines().count(), 1, "header only");
    let det: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("detection.json")).unwrap()).unwrap();
    assert_eq!(det["sifted_bits"], 0);
    assert_eq!(det["clicks"], 0);
}

#[test]
fn staged_run_is_reproducible() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    for dir in [a.path(), b.path()] {
        let cfg = config(dir, SHORT_PASS);
        let common = ["--config", cfg.as_str(), "--seed", "3", "--scale", "0.02"];
        for cmd in ["simulate-pass", "simulate-qkd"] {
            let mut args = vec![cmd];
            args.extend(common);
            run_ok(&args, dir);
        }
        let mut args = vec!["reconcile", "--strategy", "e"];
        args.extend(common);
        run_ok(&args, dir);
        let mut args = vec!["skl-report"];
        args.extend(common);
        run_ok(&args, dir);
    }
    let files = [
        "budget.csv",
        "turbulence.csv",
        "channel.bin",
        "scint_decimated.csv",
        "sifted.bin",
        "qkd_seconds.csv",
        "detection.json",
        "blocks_baseline.csv",
        "reconcile_baseline.json",
        "skl_report.csv",
        "skl_report.json",
        "manifest_skl-report.json",
    ];
    for f in files {
        let x = fs::read(a.path().join("out").join(f)).unwrap();
        let y = fs::read(b.path().join("out").join(f)).unwrap();
        assert!(!x.is_empty(), "{f} empty");
        assert!(x == y, "{f} differs between runs");
    }
    let blocks = fs::read_to_string(a.path().join("out/blocks_baseline.csv")).unwrap();
    assert_eq!(
        blocks.lines().next().unwrap(),
        "block_idx,n,phi_sel,mode,strategy,rate_final,m_bits,success,f"
    );
    assert!(blocks.lines().count() > 1);
}

#[test]
fn different_seeds_differ() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    for (dir, seed) in [(a.path(), "1"), (b.path(), "2")] {
        let cfg = config(dir, SHORT_PASS);
        run_ok(&["simulate-pass", "--config", &cfg, "--seed", seed, "--scale", "0.02"], dir);
    }
    let x = fs::read(a.path().join("out/channel.bin")).unwrap();
    let y = fs::read(b.path().join("out/channel.bin")).unwrap();
    assert_ne!(x, y);
}

#[test]
fn trace_rate_mismatch_is_rejected() {
    let dir = TempDir::new().unwrap();
    let cfg = config(dir.path(), SHORT_PASS);
    run_ok(&["simulate-pass", "--config", &cfg, "--scale", "0.02"], dir.path());
    let o = satqkd(&["simulate-qkd", "--config", &cfg, "--scale", "0.01"], dir.path());
    assert_eq!(code(&o), 2);
}
