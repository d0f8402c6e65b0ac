use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn qbcomp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qbcomp"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn path_str(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

#[test]
fn example1_report() {
    let v = stdout_json(&qbcomp(&["example1", "--epsilon", "0.1"]));
    assert!((v["errors"]["1"].as_f64().unwrap() - 0.1).abs() < 1e-9);
    assert!((v["errors"]["2"].as_f64().unwrap() - 0.05).abs() < 1e-9);
    assert!((v["rate"].as_f64().unwrap() - 0.998196).abs() < 1e-6);
    assert!(v["rate_exact"].as_f64().unwrap() > 1.84);
}

#[test]
fn example2_report() {
    let v = stdout_json(&qbcomp(&["example2", "--epsilon", "0.1", "--n", "8"]));
    assert!((v["errors"]["2"].as_f64().unwrap() - 0.4 / 9.0).abs() < 1e-9);
    assert!(v["rate"].as_f64().unwrap() <= 1.0);
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(
        qbcomp(&["example1", "--epsilon", "0.6"]).status.code(),
        Some(2)
    );
    assert_eq!(
        qbcomp(&["example2", "--epsilon", "0.1", "--n", "1"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(qbcomp(&["example1"]).status.code(), Some(2));
    assert_eq!(qbcomp(&["no-such-command"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let out = path_str(dir.path());
    assert_eq!(
        qbcomp(&["sweep-error", "--samples", "0", "--out-dir", out])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        qbcomp(&[
            "sweep-dim",
            "--config",
            "/nonexistent/cfg.json",
            "--out-dir",
            out
        ])
        .status
        .code(),
        Some(2)
    );
    assert_eq!(
        qbcomp(&["sweep-error", "--seed", "-1", "--out-dir", out])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn bin_report() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("dist.json");
    std::fs::write(&input, r#"{"p": [0.10, 0.35, 0.4, 0.15]}"#).unwrap();
    let v = stdout_json(&qbcomp(&[
        "bin",
        "--input",
        path_str(&input),
        "--method",
        "arithmetic",
        "--epsilon",
        "0.4",
        "--report",
    ]));
    assert_eq!(v["partition"], serde_json::json!([2, 4]));
    let binned: Vec<f64> = serde_json::from_value(v["binned"].clone()).unwrap();
    for (a, b) in binned.iter().zip([0.125, 0.375, 0.375, 0.125]) {
        assert!((a - b).abs() < 1e-15);
    }
    assert!((v["error"].as_f64().unwrap() - 0.1).abs() < 1e-12);
    assert!((v["R"].as_f64().unwrap() - 0.954434).abs() < 1e-6);
    assert_eq!(v["log2L"].as_f64(), Some(1.0));
}

#[test]
fn gallery_dump_feeds_report() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = qbcomp(&[
        "gallery-dump",
        "--case",
        "example1",
        "--epsilon",
        "0.1",
        "--out-dir",
        path_str(d),
    ]);
    assert!(out.status.success());
    let v = stdout_json(&qbcomp(&[
        "report",
        "--ensemble",
        path_str(&d.join("example1_ensemble.json")),
        "--structure",
        path_str(&d.join("example1_structure.json")),
        "--exact",
        path_str(&d.join("example1_exact_structure.json")),
    ]));
    assert!((v["errors"]["1"].as_f64().unwrap() - 0.1).abs() < 1e-9);
    assert!((v["rate_exact"].as_f64().unwrap() - 1.8419538565596851).abs() < 1e-9);
}

fn sweep_csv(dir: &Path, extra: &[&str]) -> String {
    let cfg = configs().join("paper_error_sweep.json");
    let mut args = vec![
        "sweep-error",
        "--config",
        path_str(&cfg),
        "--samples",
        "4",
        "--out-dir",
        path_str(dir),
    ];
    args.extend_from_slice(extra);
    let out = qbcomp(&args);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    std::fs::read_to_string(dir.join("records.csv")).unwrap()
}

#[test]
fn sweep_is_deterministic_and_sized_by_config() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let first = sweep_csv(a.path(), &["--no-timestamp"]);
    let second = sweep_csv(b.path(), &["--no-timestamp", "--threads", "1"]);
    assert_eq!(first, second);
    assert_eq!(first.lines().count(), 1 + 50 * 4 * 2);
    assert!(first.starts_with("dim,epsilon,sample,method,L,rate_entropy,rate_log2L,l1_error\n"));

    let stamped = sweep_csv(b.path(), &[]);
    assert!(stamped.starts_with("# generated"));
    assert_eq!(
        stamped.lines().skip(1).collect::<Vec<_>>(),
        first.lines().collect::<Vec<_>>()
    );

    for name in [
        "aggregate.csv",
        "differences.csv",
        "fits.json",
        "rate_entropy.svg",
        "rate_log2L.svg",
    ] {
        assert!(a.path().join(name).exists(), "{name} missing");
    }
    let fits: Value =
        serde_json::from_str(&std::fs::read_to_string(a.path().join("fits.json")).unwrap())
            .unwrap();
    assert_eq!(fits.as_array().unwrap().len(), 4);
    assert_eq!(fits[0]["reference"]["a"].as_f64(), Some(7.856));

    let out = qbcomp(&[
        "fit",
        "--input",
        path_str(&a.path().join("records.csv")),
        "--model",
        "error",
        "--rate-kind",
        "log2L",
    ]);
    let refit: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(refit.as_array().unwrap().len(), 2);
    assert_eq!(refit[0]["fit"]["a"], fits[2]["fit"]["a"]);
}

#[test]
fn dimension_sweep_rows_follow_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("paper_dim_sweep.json");
    let out = qbcomp(&[
        "sweep-dim",
        "--config",
        path_str(&cfg),
        "--samples",
        "2",
        "--dims",
        "64,128,256",
        "--out-dir",
        path_str(dir.path()),
        "--no-timestamp",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = std::fs::read_to_string(dir.path().join("records.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 3 * 2 * 2);
    let summary = String::from_utf8(out.stdout).unwrap();
    assert!(summary.contains("(ref 0.5258)"));
}

#[test]
fn bundled_configs_describe_full_sweeps() {
    let error: Value = serde_json::from_str(
        &std::fs::read_to_string(configs().join("paper_error_sweep.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(error["samples"], 1000);
    assert_eq!(error["epsilons"]["logspace"]["count"], 50);
    let dims: Value = serde_json::from_str(
        &std::fs::read_to_string(configs().join("paper_dim_sweep.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(dims["dims"].as_array().unwrap().len(), 9);
}
