use std::path::Path;
use std::process::{Command, Output};

fn vibmon(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vibmon"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// About 30 segments per class.
fn small_synth(dir: &Path, out: &str) {
    let o = vibmon(dir, &["synth", "--seed", "5", "--out", out, "--duration", "5.1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn synth_writes_four_recordings_and_a_manifest() {
    let dir = tempfile::tempdir().unwrap();
    small_synth(dir.path(), "a");
    small_synth(dir.path(), "b");
    for class in ["normal", "inner", "outer", "ball"] {
        let a = std::fs::read(dir.path().join("a").join(format!("{class}.bin"))).unwrap();
        let b = std::fs::read(dir.path().join("b").join(format!("{class}.bin"))).unwrap();
        assert_eq!(a, b);
    }
    let manifest = std::fs::read_to_string(dir.path().join("a/manifest.toml")).unwrap();
    assert_eq!(manifest.matches("[[entry]]").count(), 4);
    assert!(manifest.contains("path = \"outer.bin\""));
}

#[test]
fn synth_rejects_zero_duration() {
    let dir = tempfile::tempdir().unwrap();
    let o = vibmon(dir.path(), &["synth", "--seed", "1", "--out", "x", "--duration", "0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("invalid parameter"), "{}", stderr(&o));
}

#[test]
fn seed_is_mandatory() {
    let dir = tempfile::tempdir().unwrap();
    let o = vibmon(dir.path(), &["synth", "--out", "x"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("seed"));
}

#[test]
fn ingest_reports_counts_and_bad_files() {
    let dir = tempfile::tempdir().unwrap();
    small_synth(dir.path(), "data");
    let o = vibmon(dir.path(), &["ingest", "--manifest", "data/manifest.toml", "--out", "cache"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o).trim(), "segments: normal=30 inner=30 outer=30 ball=30");
    assert!(dir.path().join("cache/segments.toml").is_file());

    let mixed = std::fs::read_to_string(dir.path().join("data/manifest.toml"))
        .unwrap()
        .replace("inner.bin", "gone.bin");
    std::fs::write(dir.path().join("data/mixed.toml"), mixed).unwrap();
    let o = vibmon(dir.path(), &["ingest", "--manifest", "data/mixed.toml", "--out", "cache2"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "segments: normal=30 inner=0 outer=30 ball=30");
    assert!(stderr(&o).contains("gone.bin"));

    let none = "[[entry]]\npath = \"nope.bin\"\nlabel = \"ball\"\n";
    std::fs::write(dir.path().join("none.toml"), none).unwrap();
    let o = vibmon(dir.path(), &["ingest", "--manifest", "none.toml", "--out", "cache3"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn train_eval_predict_round() {
    let dir = tempfile::tempdir().unwrap();
    small_synth(dir.path(), "data");
    let train = ["train", "--manifest", "data/manifest.toml", "--seed", "2", "--out", "run"];
    let o = vibmon(dir.path(), &train);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = vibmon(dir.path(), &["eval", "--out", "run"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("accuracy (macro recall)"));
    for k in ["svm", "hmm", "gmm", "enn"] {
        let csv = std::fs::read_to_string(dir.path().join(format!("run/confusion_{k}.csv"))).unwrap();
        assert!(csv.starts_with("true\\predicted,Normal,Inner,Outer,Ball\n"));
        assert_eq!(csv.lines().count(), 5);
    }

    // identical config and seed rewrite identical bytes
    let snapshot = |name: &str| std::fs::read(dir.path().join("run").join(name)).unwrap();
    let before: Vec<Vec<u8>> = ["model.vdmb", "train.csv", "test.csv", "confusion_svm.csv"].iter().map(|n| snapshot(n)).collect();
    assert_eq!(vibmon(dir.path(), &train).status.code(), Some(0));
    assert_eq!(vibmon(dir.path(), &["eval", "--out", "run"]).status.code(), Some(0));
    let after: Vec<Vec<u8>> = ["model.vdmb", "train.csv", "test.csv", "confusion_svm.csv"].iter().map(|n| snapshot(n)).collect();
    assert_eq!(before, after);

    let o = vibmon(dir.path(), &["predict", "--bundle", "run/model.vdmb", "--input", "data/outer.bin"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.starts_with("segment,classifier,class,score_normal"));
    assert_eq!(text.lines().count(), 1 + 30 * 4);

    let o = vibmon(
        dir.path(),
        &["predict", "--bundle", "run/model.vdmb", "--input", "data/outer.bin", "--features", "mfcc"],
    );
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("feature spec mismatch"));
}

#[test]
fn extract_then_train_from_table() {
    let dir = tempfile::tempdir().unwrap();
    small_synth(dir.path(), "data");
    let o = vibmon(
        dir.path(),
        &["extract", "--manifest", "data/manifest.toml", "--out", "f", "--features", "kurtosis"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let table = std::fs::read_to_string(dir.path().join("f/features.csv")).unwrap();
    assert_eq!(table.lines().next(), Some("label,f0"));
    assert_eq!(table.lines().count(), 121);
    let o = vibmon(
        dir.path(),
        &[
            "train", "--table", "f/features.csv", "--features", "kurtosis", "--classifiers", "gmm,enn", "--seed", "1",
            "--out", "run",
        ],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("trained gmm,enn"));
}

#[test]
fn sweep_writes_one_row_per_value() {
    let dir = tempfile::tempdir().unwrap();
    small_synth(dir.path(), "data");
    std::fs::write(
        dir.path().join("run.toml"),
        "seed = 4\nout = \"sw\"\nmanifest = \"data/manifest.toml\"\nhmm_mixtures = 2\n",
    )
    .unwrap();
    let o = vibmon(dir.path(), &["sweep", "--config", "run.toml", "--param", "mfd"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("sw/sweep_mfd_size.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "param_value,svm,hmm,gmm,enn");
    assert_eq!(lines.len(), 20);
    assert!(lines[1].starts_with("2,") && lines[19].starts_with("20,"));
}

#[test]
fn config_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.toml"), "sed = 4\n").unwrap();
    let o = vibmon(dir.path(), &["synth", "--config", "bad.toml"]);
    assert_eq!(o.status.code(), Some(2));
    let o = vibmon(dir.path(), &["train", "--seed", "1", "--out", "x", "--manifest", "missing.toml"]);
    assert_eq!(o.status.code(), Some(2));
    let o = vibmon(dir.path(), &["train", "--seed", "1", "--out", "x", "--features", "wavelets"]);
    assert_eq!(o.status.code(), Some(2));
    let o = vibmon(dir.path(), &["frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
}
