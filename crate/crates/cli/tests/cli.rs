use std::fs;
use std::path::Path;
use std::process::Command;

use sparse_softmax_cli::run;

fn args(line: &str, out: &Path) -> Vec<String> {
    let mut v: Vec<String> = std::iter::once("sparse-softmax".to_string())
        .chain(line.split_whitespace().map(String::from))
        .collect();
    v.push("--out".into());
    v.push(out.display().to_string());
    v
}

fn csv_files(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".csv"))
        .collect();
    names.sort();
    names
}

#[test]
fn sweep_writes_one_csv_per_row_plus_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(args("sweep-k --n-classes 150 --k 1,10,20,50,100 --seed 7 --no-timing", dir.path())).unwrap();
    assert_eq!(out.exit_code, 0);
    let names = csv_files(dir.path());
    assert_eq!(
        names,
        [
            "softmax_kfull_seed7.csv",
            "sparse_k100_seed7.csv",
            "sparse_k10_seed7.csv",
            "sparse_k1_seed7.csv",
            "sparse_k20_seed7.csv",
            "sparse_k50_seed7.csv",
            "sweep_seed7.csv",
        ]
    );
    let summary = fs::read_to_string(dir.path().join("sweep_seed7.csv")).unwrap();
    assert_eq!(summary.lines().count(), 7);
    assert!(out.summary.contains("sparse(k=20)"));
    assert!(dir.path().join("sweep_seed7.manifest").exists());
}

#[test]
fn verify_bound_reports_log_100() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(args(
        "verify-bound --n 101 --epsilon 0.6931471805599453 --trials 100000 --seed 1",
        dir.path(),
    ))
    .unwrap();
    assert_eq!(out.exit_code, 0);
    let csv = fs::read_to_string(dir.path().join("verify_bound_n101_seed1.csv")).unwrap();
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[3], "0");
    let bound: f64 = row[5].parse().unwrap();
    assert!((bound - 4.60517).abs() < 1e-5);
}

#[test]
fn grad_check_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(args("grad-check --dim 50 --trials 1000 --seed 3", dir.path())).unwrap();
    assert_eq!(out.exit_code, 0, "{}", out.summary);
    let csv = fs::read_to_string(dir.path().join("grad_check_dim50_seed3.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1001);
}

#[test]
fn unknown_flags_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run(args("train --bogus 3", dir.path())).is_err());
    assert!(run(args("grad-check --loss sparse", dir.path())).is_err());
    assert!(run(args("sweep-k --loss sparse", dir.path())).is_err());
}

#[test]
fn divergence_fails_without_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let line = "train --n-classes 5 --feature-dim 4 --samples-per-class 10 --epochs 50 \
                --optimizer sgd --lr 1e308 --fail-on-divergence";
    let out = run(args(line, dir.path())).unwrap();
    assert_eq!(out.exit_code, 1);
    assert!(out.diagnostic.unwrap().contains("diverged"));
    assert!(!dir.path().join("softmax_kfull_seed7.manifest").exists());

    // Without the flag the divergence is reported but the run succeeds.
    let line = "train --n-classes 5 --feature-dim 4 --samples-per-class 10 --epochs 50 \
                --optimizer sgd --lr 1e308";
    let out = run(args(line, dir.path())).unwrap();
    assert_eq!(out.exit_code, 0);
    assert!(out.summary.contains("diverged"));
}

#[test]
fn rerun_from_manifest_is_byte_identical() {
    let first = tempfile::tempdir().unwrap();
    let second = tempfile::tempdir().unwrap();
    let line = "train --loss sparse --k 5 --n-classes 20 --feature-dim 8 --samples-per-class 20 \
                --epochs 3 --batch-size 16 --force-include-target --hidden 8 --no-timing";
    let out = run(args(line, first.path())).unwrap();
    assert_eq!(out.exit_code, 0);
    let manifest = first.path().join("sparse_k5_force_seed7.manifest");
    let text = fs::read_to_string(&manifest).unwrap();
    assert!(text.contains("force_include_target=true\n"));
    assert!(text.contains("batch_size=16\n"));
    assert!(text.contains("artifact_version="));

    let again = run([
        "sparse-softmax".to_string(),
        "rerun".into(),
        "--manifest".into(),
        manifest.display().to_string(),
        "--out".into(),
        second.path().display().to_string(),
    ])
    .unwrap();
    assert_eq!(again.exit_code, 0);
    for name in csv_files(first.path()) {
        assert_eq!(
            fs::read(first.path().join(&name)).unwrap(),
            fs::read(second.path().join(&name)).unwrap(),
            "{name}"
        );
    }
    // Only the recorded output location differs between the manifests.
    let strip = |t: String| t.lines().filter(|l| !l.starts_with("out=")).collect::<Vec<_>>().join("\n");
    assert_eq!(
        strip(text),
        strip(fs::read_to_string(second.path().join("sparse_k5_force_seed7.manifest")).unwrap())
    );
}

#[test]
fn binary_exit_statuses() {
    let bin = env!("CARGO_BIN_EXE_sparse-softmax");
    let dir = tempfile::tempdir().unwrap();
    let ok = Command::new(bin)
        .args(["grad-check", "--dim", "10", "--trials", "20", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(ok.status.success());
    assert!(String::from_utf8_lossy(&ok.stdout).contains("max relative error"));

    let bad = Command::new(bin).args(["train", "--nope"]).output().unwrap();
    assert!(!bad.status.success());
    assert_eq!(String::from_utf8_lossy(&bad.stderr).lines().count(), 1);

    let bad = Command::new(bin)
        .args(["verify-bound", "--epsilon", "-1", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(!bad.status.success());
    assert_eq!(String::from_utf8_lossy(&bad.stderr).lines().count(), 1);
}
