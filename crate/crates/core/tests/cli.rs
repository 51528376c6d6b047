//! End-to-end tests of the command-line binary: workflows, flag
//! precedence, the config-directory environment variable, and the
//! documented exit codes.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_sanintent")
}

fn run(args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .env_remove("SANINTENT_CONFIG_DIR")
        .output()
        .expect("failed to spawn the binary")
}

fn run_in(args: &[&str], envs: &[(&str, &Path)]) -> Output {
    let mut cmd = Command::new(bin());
    cmd.args(args).env_remove("SANINTENT_CONFIG_DIR");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("failed to spawn the binary")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Writes a small three-intent corpus and returns its path.
fn small_corpus(dir: &Path) -> PathBuf {
    let path = dir.join("corpus.jsonl");
    let out = run(&[
        "dataset",
        "synth",
        "--intents",
        "3",
        "--per-intent",
        "30",
        "--seed",
        "2",
        "--output",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    path
}

/// Trains a quick model into `out_dir` and returns the checkpoint path.
fn quick_train(corpus: &Path, out_dir: &Path, extra: &[&str]) -> PathBuf {
    let mut args = vec![
        "train",
        "--dataset",
        corpus.to_str().unwrap(),
        "--out-dir",
        out_dir.to_str().unwrap(),
        "--epochs",
        "4",
        "--embedding-dim",
        "12",
        "--hidden-units",
        "8",
        "--seed",
        "3",
    ];
    args.extend_from_slice(extra);
    let out = run(&args);
    assert!(out.status.success(), "train failed: {}", stderr(&out));
    out_dir.join("checkpoint.bin")
}

#[test]
fn train_evaluate_predict_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = small_corpus(dir.path());
    let ckpt = quick_train(&corpus, &dir.path().join("run"), &[]);

    for file in ["checkpoint.bin", "history.jsonl", "resolved.cfg"] {
        assert!(dir.path().join("run").join(file).is_file(), "missing {file}");
    }
    let history = std::fs::read_to_string(dir.path().join("run/history.jsonl")).unwrap();
    assert_eq!(history.lines().count(), 4, "one history row per epoch");
    assert!(history.lines().all(|l| l.contains("\"train_loss\"")));

    let report_dir = dir.path().join("report");
    let out = run(&[
        "evaluate",
        "--model",
        ckpt.to_str().unwrap(),
        "--dataset",
        corpus.to_str().unwrap(),
        "--out-dir",
        report_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("accuracy:"), "{text}");
    assert!(text.contains("confusion"), "{text}");
    assert!(report_dir.join("report.txt").is_file());
    let jsonl = std::fs::read_to_string(report_dir.join("report.jsonl")).unwrap();
    assert!(jsonl.trim_start().starts_with('{'), "report.jsonl must be a json line");

    let out = run(&[
        "predict",
        "--model",
        ckpt.to_str().unwrap(),
        "turn on the kitchen lights",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let line = stdout(&out);
    let mut cols = line.trim_end().split('\t');
    let intent = cols.next().unwrap();
    let prob: f64 = cols.next().unwrap().parse().unwrap();
    assert!(!intent.is_empty());
    assert!((0.0..=1.0).contains(&prob), "probability {prob}");
}

#[test]
fn predict_reads_stdin_and_prints_attention() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = small_corpus(dir.path());
    let ckpt = quick_train(&corpus, &dir.path().join("run"), &[]);

    let mut child = Command::new(bin())
        .args(["predict", "--model", ckpt.to_str().unwrap(), "--attention"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child
        .stdin
        .take()
        .unwrap()
        .write_all(b"switch off the lamp\n\nplay some jazz\n")
        .unwrap();
    let out = child.wait_with_output().unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    let lines: Vec<&str> = text.trim_end().lines().collect();
    assert_eq!(lines.len(), 2, "blank stdin lines are skipped: {text}");
    for line in lines {
        // intent \t prob \t tok=weight ...
        let cols: Vec<&str> = line.split('\t').collect();
        assert!(cols.len() >= 3, "expected attention columns: {line}");
        assert!(cols[2].contains('='), "{line}");
    }
}

#[test]
fn flag_overrides_beat_config_file_and_env_dir_supplies_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = small_corpus(dir.path());

    // A config directory with sanintent.cfg supplying epochs=2.
    let cfg_dir = dir.path().join("cfgdir");
    std::fs::create_dir_all(&cfg_dir).unwrap();
    std::fs::write(
        cfg_dir.join("sanintent.cfg"),
        "epochs=2\nembedding_dim=12\nhidden_units=8\nseed=3\n",
    )
    .unwrap();

    // Env default applies.
    let out_a = dir.path().join("a");
    let out = run_in(
        &[
            "train",
            "--dataset",
            corpus.to_str().unwrap(),
            "--out-dir",
            out_a.to_str().unwrap(),
        ],
        &[("SANINTENT_CONFIG_DIR", &cfg_dir)],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let resolved = std::fs::read_to_string(out_a.join("resolved.cfg")).unwrap();
    assert!(resolved.contains("epochs=2\n"), "{resolved}");

    // A flag beats the env-supplied file.
    let out_b = dir.path().join("b");
    let out = run_in(
        &[
            "train",
            "--dataset",
            corpus.to_str().unwrap(),
            "--out-dir",
            out_b.to_str().unwrap(),
            "--epochs",
            "3",
        ],
        &[("SANINTENT_CONFIG_DIR", &cfg_dir)],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let resolved = std::fs::read_to_string(out_b.join("resolved.cfg")).unwrap();
    assert!(resolved.contains("epochs=3\n"), "{resolved}");

    // An explicit --config shadows the env directory entirely.
    let explicit = dir.path().join("explicit.cfg");
    std::fs::write(&explicit, "epochs=1\nembedding_dim=12\nhidden_units=8\nseed=3\n").unwrap();
    let out_c = dir.path().join("c");
    let out = run_in(
        &[
            "train",
            "--config",
            explicit.to_str().unwrap(),
            "--dataset",
            corpus.to_str().unwrap(),
            "--out-dir",
            out_c.to_str().unwrap(),
        ],
        &[("SANINTENT_CONFIG_DIR", &cfg_dir)],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let resolved = std::fs::read_to_string(out_c.join("resolved.cfg")).unwrap();
    assert!(resolved.contains("epochs=1\n"), "{resolved}");
}

#[test]
fn exit_codes_are_documented_and_disjoint() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = small_corpus(dir.path());

    // 2: config error (no dataset).
    let out = run(&["train"]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    assert!(stderr(&out).starts_with("E_CONFIG:"), "{}", stderr(&out));

    // 2: config error (bad flag value).
    let out = run(&["train", "--dataset", corpus.to_str().unwrap(), "--epochs", "zero"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).starts_with("E_CONFIG:"));

    // 2: clap usage error (unknown flag) — same class as config errors.
    let out = run(&["train", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(2));

    // 3: data error (malformed jsonl).
    let bad = dir.path().join("bad.jsonl");
    std::fs::write(&bad, "{\"text\": \"hi\"}\n").unwrap(); // missing intent
    let out = run(&["train", "--dataset", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
    assert!(stderr(&out).starts_with("E_DATA:"), "{}", stderr(&out));

    // 4: i/o error (missing file).
    let out = run(&["train", "--dataset", "/no/such/corpus.jsonl"]);
    assert_eq!(out.status.code(), Some(4), "{}", stderr(&out));
    assert!(stderr(&out).starts_with("E_IO:"), "{}", stderr(&out));

    // 5: checkpoint error (not a checkpoint).
    let junk = dir.path().join("junk.bin");
    std::fs::write(&junk, b"not a checkpoint at all").unwrap();
    let out = run(&["predict", "--model", junk.to_str().unwrap(), "hello"]);
    assert_eq!(out.status.code(), Some(5), "{}", stderr(&out));
    assert!(stderr(&out).starts_with("E_CHECKPOINT:"), "{}", stderr(&out));

    // 0: success.
    let out = run(&["dataset", "stats", "--input", corpus.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn dataset_convert_round_trips_through_csv() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = small_corpus(dir.path());

    let as_csv = dir.path().join("corpus.csv");
    let out = run(&[
        "dataset",
        "convert",
        "--input",
        corpus.to_str().unwrap(),
        "--output",
        as_csv.to_str().unwrap(),
        "--to",
        "csv",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let csv_text = std::fs::read_to_string(&as_csv).unwrap();
    assert!(csv_text.starts_with("text,intent\n"), "{csv_text}");

    let back = dir.path().join("back.jsonl");
    let out = run(&[
        "dataset",
        "convert",
        "--input",
        as_csv.to_str().unwrap(),
        "--from",
        "csv",
        "--output",
        back.to_str().unwrap(),
        "--to",
        "jsonl",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(
        std::fs::read(&corpus).unwrap(),
        std::fs::read(&back).unwrap(),
        "jsonl -> csv -> jsonl must reproduce the original bytes"
    );
}

#[test]
fn dataset_stats_reports_counts() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = small_corpus(dir.path());
    let out = run(&["dataset", "stats", "--input", corpus.to_str().unwrap()]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("examples: 90"), "{text}");
    assert!(text.contains("intents: 3"), "{text}");
    assert!(text.contains("vocabulary:"), "{text}");
}

#[test]
fn evaluate_rejects_label_mismatch_as_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = small_corpus(dir.path());
    let ckpt = quick_train(&corpus, &dir.path().join("run"), &[]);

    // A corpus with a different label set.
    let other = dir.path().join("other.jsonl");
    let out = run(&[
        "dataset",
        "synth",
        "--intents",
        "5",
        "--per-intent",
        "4",
        "--seed",
        "4",
        "--output",
        other.to_str().unwrap(),
    ]);
    assert!(out.status.success());

    let out = run(&[
        "evaluate",
        "--model",
        ckpt.to_str().unwrap(),
        "--dataset",
        other.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
    assert!(stderr(&out).starts_with("E_DATA:"), "{}", stderr(&out));
}

#[test]
fn lstm_flag_round_trips_through_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = small_corpus(dir.path());
    let ckpt = quick_train(&corpus, &dir.path().join("run"), &["--arch", "lstm"]);
    let resolved = std::fs::read_to_string(dir.path().join("run/resolved.cfg")).unwrap();
    assert!(resolved.contains("arch=lstm\n"), "{resolved}");

    let out = run(&["predict", "--model", ckpt.to_str().unwrap(), "dim the lights"]);
    assert!(out.status.success(), "{}", stderr(&out));
}
