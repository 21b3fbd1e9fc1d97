use std::fmt::Write as _;
use std::path::Path;
use std::process::{Command, Output};

fn imbal(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_imbal")).args(args).output().expect("binary runs")
}

/// 140 rows, 3 features, 100 vs 40 with the label riding on column `a`.
fn write_toy_csv(path: &Path) {
    let mut s = String::from("a,b,c,Label\n");
    for i in 0..140u32 {
        let y = u32::from(i >= 100);
        let jitter = f64::from((i * 37) % 17) / 17.0;
        let a = f64::from(y) * 2.0 + jitter;
        let b = f64::from((i * 13) % 11);
        let _ = writeln!(s, "{a},{b},{},{y}", 2.0 * a + 1.0);
    }
    std::fs::write(path, s).unwrap();
}

fn write_config(dir: &Path) -> String {
    let path = dir.join("run.toml");
    std::fs::write(
        &path,
        r#"
folds = 3
models = ["gbc-paper", "etc-paper"]

[gan]
epochs = 2
batch_size = 32
generator_dims = [8]
discriminator_dims = [8]
embedding_dim = 4

[overrides.gbc-paper]
n_estimators = 8

[overrides.etc-paper]
n_estimators = 10
"#,
    )
    .unwrap();
    path.display().to_string()
}

fn text(b: &[u8]) -> String {
    String::from_utf8_lossy(b).into_owned()
}

#[test]
fn inspect_prints_class_shares() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("toy.csv");
    write_toy_csv(&csv);
    let out_dir = dir.path().join("out");
    let out = imbal(&["inspect", "--input", csv.to_str().unwrap(), "--out-dir", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    assert!(text(&out.stdout).contains("0: 100 (71.4%), 1: 40 (28.6%)"), "{}", text(&out.stdout));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["rows"], 140);
}

#[test]
fn missing_input_exits_with_ingestion_code() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.csv");
    let out = imbal(&["inspect", "--input", missing.to_str().unwrap(), "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains("not found"), "{}", text(&out.stderr));
}

#[test]
fn malformed_label_exits_with_ingestion_code() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("bad.csv");
    std::fs::write(&csv, "a,Label\n1.0,0\n2.0,7\n").unwrap();
    let out = imbal(&["inspect", "--input", csv.to_str().unwrap(), "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn zero_trials_exits_with_tuning_code() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("toy.csv");
    write_toy_csv(&csv);
    let out = imbal(&[
        "tune",
        "--target",
        "etc-paper",
        "--n-trials",
        "0",
        "--input",
        csv.to_str().unwrap(),
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(4));
    assert!(text(&out.stderr).contains("empty study"));
}

#[test]
fn bad_config_exits_with_general_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "folds = \"ten\"\n").unwrap();
    let out = imbal(&["inspect", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn balance_train_evaluate_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("toy.csv");
    write_toy_csv(&csv);
    let cfg = write_config(dir.path());
    let out_dir = dir.path().join("out");
    let common = ["--config", &cfg, "--input", csv.to_str().unwrap(), "--out-dir", out_dir.to_str().unwrap(), "--jobs", "1"];

    let out = imbal(&[&["balance", "--policy", "smote"], &common[..]].concat());
    assert!(out.status.success(), "{}", text(&out.stderr));
    assert!(text(&out.stdout).contains("60 synthetic rows"), "{}", text(&out.stdout));
    assert!(out_dir.join("balanced.csv").exists());

    let out = imbal(&[&["train", "--policy", "smote"], &common[..]].concat());
    assert!(out.status.success(), "{}", text(&out.stderr));
    assert!(out_dir.join("model/ensemble.json").exists());

    let out = imbal(&[&["evaluate"], &common[..]].concat());
    assert!(out.status.success(), "{}", text(&out.stderr));
    let eval: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("evaluation.json")).unwrap()).unwrap();
    assert!(eval["report"]["accuracy"].as_f64().unwrap() > 0.8);
}

#[test]
fn bench_prints_tables_and_is_repeatable() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("toy.csv");
    write_toy_csv(&csv);
    let cfg = write_config(dir.path());
    let out_dir = dir.path().join("out");
    let args = ["bench", "--config", &cfg, "--input", csv.to_str().unwrap(), "--out-dir", out_dir.to_str().unwrap()];
    let first = imbal(&args);
    assert!(first.status.success(), "{}", text(&first.stderr));
    let stdout = text(&first.stdout);
    for label in ["Imbalanced", "Balanced (SMOTE)", "Balanced (GAN)", "GBC", "ETC", "Weighted Ensembled"] {
        assert!(stdout.contains(label), "{label} missing from\n{stdout}");
    }
    let json = std::fs::read(out_dir.join("bench.json")).unwrap();
    let second = imbal(&args);
    assert!(second.status.success());
    assert_eq!(first.stdout, second.stdout);
    assert_eq!(json, std::fs::read(out_dir.join("bench.json")).unwrap());
}
