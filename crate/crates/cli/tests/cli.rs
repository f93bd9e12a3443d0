use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn hsan(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hsan"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let o = hsan(args);
    assert!(
        o.status.success(),
        "{args:?} failed:\n{}\n{}",
        String::from_utf8_lossy(&o.stdout),
        String::from_utf8_lossy(&o.stderr)
    );
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn code(args: &[&str]) -> i32 {
    hsan(args).status.code().expect("exit code")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn small_corpus(dir: &Path) -> std::path::PathBuf {
    let spec = dir.join("spec.json");
    fs::write(
        &spec,
        r#"{"users_per_role": [6, 3, 3], "regular_multiplier": 2, "tweets": [0, 3]}"#,
    )
    .unwrap();
    let data = dir.join("data");
    ok(&["gen-synth", "--spec", s(&spec), "--out", s(&data), "--seed", "5"]);
    data
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(code(&[]), 2);
    assert_eq!(code(&["frobnicate"]), 2);
    assert_eq!(code(&["train", "--bogus"]), 2);
    assert_eq!(code(&["--help"]), 0);
}

#[test]
fn validation_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    assert_eq!(code(&["gen-synth", "--out", s(&out), "--set", "synth.signal_rate=3"]), 1);
    assert_eq!(code(&["gen-synth", "--out", s(&out), "--set", "synth.no_such=1"]), 1);
    assert_eq!(code(&["train", "--data", s(dir.path()), "--out", s(&out)]), 1);
    assert_eq!(code(&["evaluate", "--ckpt", s(&dir.path().join("missing")), "--data", "x"]), 1);
}

#[test]
fn gradcheck_tiny_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("gc");
    let stdout = ok(&["gradcheck", "--config", "tiny", "--out", s(&out)]);
    assert!(stdout.contains("48 of 48 variants pass"), "{stdout}");
    assert!(out.join("gradcheck.json").is_file());
    // a tolerance nobody can meet fails with exit 1
    assert_eq!(code(&["gradcheck", "--config", "tiny", "--set", "gradcheck.tol=0"]), 1);
}

#[test]
fn train_evaluate_predict_explain() {
    let dir = tempfile::tempdir().unwrap();
    let data = small_corpus(dir.path());
    for split in ["train", "dev", "test"] {
        assert!(data.join(format!("{split}.jsonl")).is_file());
    }
    assert!(data.join("manifest.json").is_file());
    let before = fs::read(data.join("train.jsonl")).unwrap();

    let run1 = dir.path().join("run1");
    ok(&["train", "--config", "tiny", "--data", s(&data), "--out", s(&run1)]);
    for f in ["best.ckpt", "last.ckpt", "log.jsonl", "config.json", "command.json", "vocab.tsv", "test_report.json"] {
        assert!(run1.join(f).is_file(), "{f}");
    }
    assert_eq!(fs::read(data.join("train.jsonl")).unwrap(), before);

    // reusing the directory needs --overwrite
    assert_eq!(code(&["train", "--config", "tiny", "--data", s(&data), "--out", s(&run1)]), 1);

    // replaying the written config reproduces the run bitwise
    let run2 = dir.path().join("run2");
    ok(&["train", "--config", s(&run1.join("config.json")), "--data", s(&data), "--out", s(&run2)]);
    for f in ["best.ckpt", "log.jsonl"] {
        assert_eq!(fs::read(run1.join(f)).unwrap(), fs::read(run2.join(f)).unwrap(), "{f}");
    }

    let ev = dir.path().join("ev");
    let stdout = ok(&["evaluate", "--ckpt", s(&run1.join("best")), "--data", s(&data.join("test")), "--out", s(&ev)]);
    assert!(stdout.contains("macro-F1"), "{stdout}");
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(ev.join("report.json")).unwrap()).unwrap();
    let acc = report["accuracy"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&acc));
    let test_report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(run1.join("test_report.json")).unwrap()).unwrap();
    assert_eq!(report["accuracy"], test_report["accuracy"]);

    // default output directory sits next to the checkpoint
    ok(&["predict", "--ckpt", s(&run1.join("best")), "--data", s(&data.join("dev"))]);
    let preds = fs::read_to_string(run1.join("predict-best-dev/predictions.jsonl")).unwrap();
    let first: serde_json::Value = serde_json::from_str(preds.lines().next().unwrap()).unwrap();
    assert_eq!(first["probs"].as_object().unwrap().len(), 7);

    let ex = dir.path().join("ex");
    ok(&["explain", "--ckpt", s(&run1.join("best.ckpt")), "--data", s(&data.join("dev.jsonl")), "--out", s(&ex), "--limit", "3"]);
    let reports: serde_json::Value = serde_json::from_str(&fs::read_to_string(ex.join("attention.json")).unwrap()).unwrap();
    assert_eq!(reports.as_array().unwrap().len(), 3);
    assert!(fs::read_to_string(ex.join("heatmap.html")).unwrap().contains("<html"));
}

#[test]
fn transfer_and_baselines() {
    let dir = tempfile::tempdir().unwrap();
    let data = small_corpus(dir.path());
    let pf = data.join("public_figure");
    let vocab_dir = dir.path().join("vocab");
    ok(&["build-vocab", "--data", s(&data), "--data", s(&pf), "--out", s(&vocab_dir)]);
    let vocab = vocab_dir.join("vocab.tsv");

    let pre = dir.path().join("pre");
    ok(&["pretrain", "--config", "tiny", "--data", s(&pf), "--vocab", s(&vocab), "--exclude", s(&data), "--out", s(&pre)]);
    // overlapping users are refused
    let bad = dir.path().join("bad");
    assert_eq!(code(&["pretrain", "--config", "tiny", "--data", s(&pf), "--exclude", s(&pf), "--out", s(&bad)]), 1);

    let ft = dir.path().join("ft");
    ok(&["finetune", "--config", "tiny", "--from-ckpt", s(&pre.join("best")), "--data", s(&data), "--train-frac", "0.5", "--out", s(&ft)]);
    let stages: serde_json::Value = serde_json::from_str(&fs::read_to_string(ft.join("stages.json")).unwrap()).unwrap();
    assert_eq!(stages[0]["name"], "head");
    assert_eq!(stages[1]["name"], "full");
    let log = fs::read_to_string(ft.join("log.jsonl")).unwrap();
    assert!(log.lines().next().unwrap().contains("\"stage\":\"head\""));

    let bl = dir.path().join("bl");
    let stdout = ok(&["baseline", "--data", s(&data), "--out", s(&bl)]);
    assert!(stdout.contains("mnb") && stdout.contains("fasttext"), "{stdout}");
    for k in ["mnb", "svm", "fasttext"] {
        assert!(bl.join(format!("{k}.ckpt")).is_file());
    }
    let ev = dir.path().join("ev");
    ok(&["evaluate", "--ckpt", s(&bl.join("mnb")), "--data", s(&data.join("test")), "--out", s(&ev)]);
    let a: serde_json::Value = serde_json::from_str(&fs::read_to_string(ev.join("report.json")).unwrap()).unwrap();
    let b: serde_json::Value = serde_json::from_str(&fs::read_to_string(bl.join("mnb_report.json")).unwrap()).unwrap();
    assert_eq!(a["accuracy"], b["accuracy"]);
}

#[test]
fn ablation_grid_runs() {
    let dir = tempfile::tempdir().unwrap();
    let data = small_corpus(dir.path());
    let out = dir.path().join("ab");
    let stdout = ok(&[
        "ablate", "--config", "tiny", "--data", s(&data), "--out", s(&out), "--grid", "attention", "--seeds", "1,2",
        "--set", "train.epochs=1",
    ]);
    assert!(stdout.contains("w/o all attention"), "{stdout}");
    let grid: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("grid.json")).unwrap()).unwrap();
    let rows = grid["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 5);
    assert!(rows.iter().all(|r| r["accuracy"].as_array().unwrap().len() == 2));
}
