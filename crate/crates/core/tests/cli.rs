//! End-to-end checks of the command-line interface through the built binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn lfc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lfc"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn train_writes_artifacts_and_final_eval() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("run");
    let out = lfc(&[
        "train",
        "--synth",
        "m=100,n=50,rank=3,density=0.3,noise=0.01",
        "--optimizer",
        "lambda_opt",
        "--preset",
        "ukdale",
        "--epochs",
        "200",
        "--seed",
        "7",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    for file in ["factors.json", "report.tsv", "timings.tsv", "manifest.json"] {
        assert!(out_dir.join(file).exists(), "missing {file}");
    }
    let report = fs::read_to_string(out_dir.join("report.tsv")).unwrap();
    let records = report.lines().count() - 1;
    assert!(records <= 200);
    let final_eval: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert!(final_eval["rmse"].as_f64().unwrap() <= 0.05);
}

#[test]
fn train_is_deterministic_across_invocations() {
    let dir = tempfile::tempdir().unwrap();
    let args = |out: &Path| {
        vec![
            "train".to_string(),
            "--synth".into(),
            "m=60,n=30,rank=2,density=0.4,noise=0.02".into(),
            "--preset".into(),
            "ukdale".into(),
            "--epochs".into(),
            "40".into(),
            "--seed".into(),
            "11".into(),
            "--out".into(),
            out.display().to_string(),
        ]
    };
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let args: Vec<String> = args(out);
        let refs: Vec<&str> = args.iter().map(|s| s.as_str()).collect();
        assert!(lfc(&refs).status.success());
    }
    assert_eq!(
        fs::read(a.join("report.tsv")).unwrap(),
        fs::read(b.join("report.tsv")).unwrap()
    );
    assert_eq!(
        fs::read(a.join("factors.json")).unwrap(),
        fs::read(b.join("factors.json")).unwrap()
    );
}

#[test]
fn baseline_without_lambda_is_usage_error() {
    let out = lfc(&[
        "train",
        "--synth",
        "m=10,n=5,rank=2,density=0.8",
        "--optimizer",
        "momentum",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--lambda"));
}

#[test]
fn divergence_has_distinct_exit_code() {
    let out = lfc(&[
        "train",
        "--synth",
        "m=20,n=10,rank=2,density=0.8",
        "--preset",
        "ukdale",
        "--eta",
        "50.0",
        "--epochs",
        "5",
        "--out",
        tempfile::tempdir().unwrap().path().join("x").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn evaluate_matches_last_train_rmse_on_training_split() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("run");
    let synth = "m=40,n=20,rank=2,density=0.5,noise=0.01";
    let train = lfc(&[
        "train", "--synth", synth, "--preset", "ukdale", "--epochs", "30", "--seed", "4",
        "--out", out_dir.to_str().unwrap(),
    ]);
    assert!(train.status.success());
    let report = fs::read_to_string(out_dir.join("report.tsv")).unwrap();
    let last = report.lines().last().unwrap();
    let train_rmse: f64 = last.split('\t').nth(1).unwrap().parse().unwrap();

    let eval = lfc(&[
        "evaluate",
        "--factors",
        out_dir.join("factors.json").to_str().unwrap(),
        "--synth",
        synth,
        "--seed",
        "4",
        "--side",
        "train",
    ]);
    assert!(eval.status.success());
    let parsed: serde_json::Value = serde_json::from_str(stdout(&eval).trim()).unwrap();
    let rmse = parsed["rmse"].as_f64().unwrap();
    assert!((rmse - train_rmse).abs() <= 1e-12, "{rmse} vs {train_rmse}");
}

#[test]
fn evaluate_recovers_noiseless_full_observation() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("run");
    let synth = "m=12,n=8,rank=1,density=1.0,noise=0";
    // Near-zero regularization ceiling: any held-open lambda floors the fit
    // and a noiseless full observation is exactly representable at rank 1.
    let train = lfc(&[
        "train", "--synth", synth, "--split", "0.9", "--eta", "0.2", "--lambda-max", "1e-12",
        "--epochs", "10000", "--eps", "1e-15", "--patience", "10000", "--seed", "2", "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(train.status.success());
    let eval = lfc(&[
        "evaluate",
        "--factors",
        out_dir.join("factors.json").to_str().unwrap(),
        "--synth",
        synth,
        "--seed",
        "2",
        "--side",
        "all",
    ]);
    assert!(eval.status.success());
    let parsed: serde_json::Value = serde_json::from_str(stdout(&eval).trim()).unwrap();
    assert!(parsed["rmse"].as_f64().unwrap() < 1e-3);
}

#[test]
fn evaluate_rejects_mismatched_factors() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("run");
    let train = lfc(&[
        "train", "--synth", "m=10,n=6,rank=2,density=0.8", "--preset", "ukdale", "--epochs",
        "2", "--out", out_dir.to_str().unwrap(),
    ]);
    assert!(train.status.success());
    let eval = lfc(&[
        "evaluate",
        "--factors",
        out_dir.join("factors.json").to_str().unwrap(),
        "--synth",
        "m=11,n=6,rank=2,density=0.8",
    ]);
    assert_eq!(eval.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&eval.stderr).contains("dimension mismatch"));
}

#[test]
fn benchmark_emits_five_rows_by_default() {
    let out = lfc(&[
        "benchmark",
        "--synth",
        "m=50,n=25,rank=2,density=0.4,noise=0.01",
        "--preset",
        "ukdale",
        "--epochs",
        "20",
        "--seed",
        "5",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 5);
    for row in rows {
        assert!(row.ends_with("\tok"), "row failed: {row}");
        let rmse: f64 = row.split('\t').nth(1).unwrap().parse().unwrap();
        assert!(rmse.is_finite());
    }
}

#[test]
fn benchmark_single_optimizer_is_one_row() {
    let out = lfc(&[
        "benchmark",
        "--synth",
        "m=30,n=15,rank=2,density=0.5",
        "--preset",
        "ukdale",
        "--epochs",
        "5",
        "--optimizers",
        "adam",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert_eq!(text.lines().count(), 2);
    assert!(text.lines().nth(1).unwrap().starts_with("adam\t"));
}

#[test]
fn synth_full_density_writes_all_cells() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("synth");
    let out = lfc(&[
        "synth", "--synth", "m=6,n=5,rank=2,density=1.0,noise=0", "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let triples = fs::read_to_string(out_dir.join("data.csv")).unwrap();
    assert_eq!(triples.lines().count(), 30);
    assert!(out_dir.join("data.csv.header.json").exists());
    assert!(out_dir.join("truth.tsv").exists());
    assert!(out_dir.join("synth.json").exists());
}

#[test]
fn synth_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let run = lfc(&[
            "synth", "--synth", "m=8,n=6,rank=2,density=0.6,noise=0.1", "--seed", "9", "--out",
            out.to_str().unwrap(),
        ]);
        assert!(run.status.success());
    }
    assert_eq!(fs::read(a.join("data.csv")).unwrap(), fs::read(b.join("data.csv")).unwrap());
    assert_eq!(fs::read(a.join("truth.tsv")).unwrap(), fs::read(b.join("truth.tsv")).unwrap());
}

#[test]
fn synth_rejects_excess_rank() {
    let out = lfc(&["synth", "--synth", "m=4,n=4,rank=9,density=0.5", "--out", "/tmp/nope"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn train_from_file_with_sidecar_header() {
    let dir = tempfile::tempdir().unwrap();
    let synth_dir = dir.path().join("data");
    assert!(lfc(&[
        "synth", "--synth", "m=40,n=20,rank=2,density=0.6,noise=0.01", "--seed", "3", "--out",
        synth_dir.to_str().unwrap(),
    ])
    .status
    .success());
    let run_dir = dir.path().join("run");
    let out = lfc(&[
        "train",
        "--data",
        synth_dir.join("data.csv").to_str().unwrap(),
        "--preset",
        "ukdale",
        "--epochs",
        "10",
        "--seed",
        "3",
        "--out",
        run_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    assert!(run_dir.join("report.tsv").exists());
}

#[test]
fn config_file_overrides_preset_but_not_flags() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("config.json");
    fs::write(&config_path, r#"{"eta": 0.02, "epochs": 7}"#).unwrap();
    let out_dir = dir.path().join("run");
    let out = lfc(&[
        "train",
        "--synth",
        "m=20,n=10,rank=2,density=0.6",
        "--preset",
        "ukdale",
        "--config",
        config_path.to_str().unwrap(),
        "--epochs",
        "4",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("manifest.json")).unwrap()).unwrap();
    // config file beats preset for eta; the flag beats the config file for epochs
    assert_eq!(manifest["config"]["eta"].as_f64().unwrap(), 0.02);
    assert_eq!(manifest["config"]["max_epochs"].as_u64().unwrap(), 4);
    let report = fs::read_to_string(out_dir.join("report.tsv")).unwrap();
    assert_eq!(report.lines().count() - 1, 4);
}
