//! Drives the compiled binary through an offline/online session and checks
//! the exit-code contract: 0 success, 1 runtime failure, 2 usage error.

use std::path::Path;
use std::process::{Command, Output};

fn r2bf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_r2bf"))
        .args(args)
        .output()
        .expect("binary should run")
}

fn tiny(out_dir: &Path, rest: &[&str]) -> Vec<String> {
    let mut args = vec![
        rest[0].to_string(),
        "--problem".into(),
        "awave2d".into(),
        "--n-interior".into(),
        "60".into(),
        "--n-boundary".into(),
        "20".into(),
        "--n-loc".into(),
        "16".into(),
        "--train-dims".into(),
        "3,3".into(),
        "--n-max".into(),
        "3".into(),
        "--out-dir".into(),
        out_dir.display().to_string(),
    ];
    args.extend(rest[1..].iter().map(|s| s.to_string()));
    args
}

#[test]
fn offline_then_online_session() {
    let dir = tempfile::tempdir().unwrap();

    let args = tiny(dir.path(), &["offline"]);
    let out = r2bf(&args.iter().map(String::as_str).collect::<Vec<_>>());
    assert!(out.status.success(), "offline failed: {}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("model_awave2d.r2bf").exists());
    assert!(dir.path().join("offline_history_awave2d.csv").exists());

    let args = tiny(dir.path(), &["online", "--mu", "1.5,0.3"]);
    let out = r2bf(&args.iter().map(String::as_str).collect::<Vec<_>>());
    assert!(out.status.success(), "online failed: {}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("certified estimate"), "unexpected output: {stdout}");

    let args = tiny(dir.path(), &["bound-check", "--samples", "3"]);
    let out = r2bf(&args.iter().map(String::as_str).collect::<Vec<_>>());
    assert!(
        out.status.success(),
        "bound-check failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("0 violations"), "unexpected output: {stdout}");
}

#[test]
fn usage_errors_exit_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().display().to_string();

    // Missing model file.
    let out = r2bf(&["online", "--out-dir", &out_dir]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("offline"));

    // Unknown problem name.
    let out = r2bf(&["truth-solve", "--problem", "heat9d", "--out-dir", &out_dir]);
    assert_eq!(out.status.code(), Some(2));

    // Malformed parameter pair.
    let out = r2bf(&["truth-solve", "--mu", "1.5", "--out-dir", &out_dir]);
    assert_eq!(out.status.code(), Some(2));

    // Unknown flag (rejected by the argument parser itself).
    let out = r2bf(&["truth-solve", "--frobnicate"]);
    assert_eq!(out.status.code(), Some(2));

    // Config file with an unknown key.
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"probelm": "awave2d"}"#).unwrap();
    let out = r2bf(&["truth-solve", "--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}
