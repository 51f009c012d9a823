use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn tribunal(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tribunal")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = tribunal(args);
    assert!(
        out.status.success(),
        "{args:?} failed ({:?}): {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

/// A generated corpus of `n` cases in a fresh temp dir.
fn corpus(n: usize, extra: &[&str]) -> (tempfile::TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("gen");
    let n = n.to_string();
    let mut args = vec!["gen", "--n-cases", &n, "--out", s(&out)];
    args.extend_from_slice(extra);
    ok(&args);
    (dir, out)
}

const SMALL_FOREST: [&str; 2] = ["--n-trees", "20"];

#[test]
fn gen_then_summarize_and_validate() {
    let (_d, out) = corpus(1000, &["--seed", "4"]);
    for f in ["cases.jsonl", "ground_truth.jsonl", "manifest.json"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let cases = out.join("cases.jsonl");
    let table = ok(&["summarize", "--input", s(&cases)]);
    assert!(table.contains("1000"), "{table}");
    let j: Value = serde_json::from_str(&ok(&["summarize", "--input", s(&cases), "--format", "json"])).unwrap();
    assert!(j.to_string().contains("1000"));
    assert!(ok(&["validate", "--input", s(&cases)]).contains("1000 cases valid"));
    let m = json(&out.join("manifest.json"));
    assert_eq!(m["subcommand"], "gen");
    assert_eq!(m["seeds"]["rng_seed"], 4);
    assert_eq!(m["params"]["n_cases"], 1000);
    assert_eq!(m["outputs"].as_array().unwrap().len(), 2);
}

#[test]
fn same_parameters_give_identical_outputs() {
    let (_a, a) = corpus(200, &["--seed", "9", "--punish-rate", "0.4"]);
    let (_b, b) = corpus(200, &["--seed", "9", "--punish-rate", "0.4"]);
    for f in ["cases.jsonl", "ground_truth.jsonl"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
    let (ma, mb) = (json(&a.join("manifest.json")), json(&b.join("manifest.json")));
    let without_out = |m: &Value| {
        let mut p = m["params"].clone();
        p.as_object_mut().unwrap().remove("out");
        p
    };
    assert_eq!(without_out(&ma), without_out(&mb));
    let hashes = |m: &Value| m["outputs"].as_array().unwrap().iter().map(|o| o["sha256"].clone()).collect::<Vec<_>>();
    assert_eq!(hashes(&ma), hashes(&mb));

    // Rerunning from a manifest's params reproduces the corpus.
    let cfg = a.join("rerun.json");
    let mut params = ma["params"].clone();
    params.as_object_mut().unwrap().remove("out");
    params.as_object_mut().unwrap().remove("lexicon");
    std::fs::write(&cfg, params.to_string()).unwrap();
    let c = a.join("rerun");
    ok(&["gen", "--config", s(&cfg), "--out", s(&c)]);
    assert_eq!(std::fs::read(a.join("cases.jsonl")).unwrap(), std::fs::read(c.join("cases.jsonl")).unwrap());

    let (_c, other) = corpus(200, &["--seed", "10", "--punish-rate", "0.4"]);
    assert_ne!(std::fs::read(a.join("cases.jsonl")).unwrap(), std::fs::read(other.join("cases.jsonl")).unwrap());
}

#[test]
fn extract_train_predict_pipeline() {
    let (d, out) = corpus(400, &[]);
    let cases = out.join("cases.jsonl");
    let features = d.path().join("features.csv");
    ok(&["extract", "--input", s(&cases), "--out", s(&features)]);
    let schema = json(&d.path().join("features.schema.json"));
    assert_eq!(schema["features"].as_array().map(Vec::len), Some(452));
    let header = std::fs::read_to_string(&features).unwrap();
    assert_eq!(header.lines().count(), 401);
    assert!(d.path().join("features.csv.manifest.json").exists());

    let model = d.path().join("model.json");
    let mut args = vec!["train", "--features", s(&features), "--out", s(&model)];
    args.extend_from_slice(&SMALL_FOREST);
    ok(&args);
    let preds = ok(&["predict", "--model", s(&model), "--features", s(&features)]);
    let lines: Vec<&str> = preds.lines().collect();
    assert_eq!(lines[0], "row,score,label");
    assert_eq!(lines.len(), 401);
    for l in &lines[1..] {
        let score: f64 = l.split(',').nth(1).unwrap().parse().unwrap();
        assert!((0.0..=1.0).contains(&score));
    }

    // A model trained on report features rejects a full matrix.
    let narrow = d.path().join("report.csv");
    ok(&["extract", "--input", s(&cases), "--model", "report", "--out", s(&narrow)]);
    let out = tribunal(&["predict", "--model", s(&model), "--features", s(&narrow)]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn rank_puts_the_planted_feature_first() {
    let (_d, out) = corpus(1000, &[]);
    let text = ok(&["rank", "--input", s(&out.join("cases.jsonl")), "--top", "5"]);
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with("rank")).collect();
    assert_eq!(rows.len(), 5, "{text}");
    assert!(rows[0].ends_with("verbal.abuse.allied.report.count"), "{text}");
}

#[test]
fn evaluation_commands_write_reports() {
    let (d, out) = corpus(900, &[]);
    let cases = out.join("cases.jsonl");

    let models = d.path().join("models");
    let mut args = vec!["eval-models", "--input", s(&cases), "--out", s(&models)];
    args.extend_from_slice(&SMALL_FOREST);
    let csv = ok(&args);
    assert_eq!(csv.lines().count(), 5, "{csv}");
    assert!(models.join("reports.csv").exists() && models.join("manifest.json").exists());
    let rocs = std::fs::read_dir(&models).unwrap().filter(|e| e.as_ref().unwrap().file_name().to_string_lossy().starts_with("roc_")).count();
    assert_eq!(rocs, 4);

    let grid = d.path().join("grid");
    let mut args = vec!["eval-grid", "--input", s(&cases), "--model", "report", "--out", s(&grid)];
    args.extend_from_slice(&SMALL_FOREST);
    assert_eq!(ok(&args).lines().count(), 10);

    let (_e, other) = corpus(300, &["--seed", "5", "--region", "euw", "--report-shift", "1.5"]);
    let port = d.path().join("port");
    let other_cases = other.join("cases.jsonl");
    let mut args = vec![
        "eval-portability", "--train", s(&cases), "--test", s(&other_cases),
        "--model", "chat", "--zero-test-chat", "true", "--out", s(&port),
    ];
    args.extend_from_slice(&SMALL_FOREST);
    let text = ok(&args);
    assert!(text.lines().nth(1).unwrap().contains("0.5"), "{text}");
}

#[test]
fn impact_paper_mode() {
    let text = ok(&["impact", "--paper-mode"]);
    for needle in ["470000", "187.5", "13,659.6"] {
        assert!(text.contains(needle), "missing {needle} in\n{text}");
    }
    let j: Value = serde_json::from_str(&ok(&["impact", "--format", "json"])).unwrap();
    assert!((j["first_year_cost_usd"].as_f64().unwrap() - 491_948.47).abs() < 0.01);
    let halved: Value = serde_json::from_str(&ok(&["impact", "--format", "json", "--paper-mode", "--majority-vote-fraction", "0.25"])).unwrap();
    assert_eq!(halved["first_year_cost_usd"].as_f64(), Some(235_000.0));
}

#[test]
fn exit_codes() {
    // Usage errors: bad flags, missing required values, bad config keys.
    assert_eq!(tribunal(&["gen"]).status.code(), Some(1));
    assert_eq!(tribunal(&["nonsense"]).status.code(), Some(1));
    assert_eq!(tribunal(&["gen", "--n-cases", "ten", "--out", "/tmp/x"]).status.code(), Some(1));
    assert_eq!(tribunal(&["impact", "--votes-per-second", "-1"]).status.code(), Some(1));
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"n_trees_typo": 3}"#).unwrap();
    assert_eq!(tribunal(&["impact", "--config", s(&cfg)]).status.code(), Some(1));
    assert_eq!(tribunal(&["gen", "--punish-rate", "1.5", "--out", s(dir.path())]).status.code(), Some(1));
    assert_eq!(tribunal(&["--help"]).status.code(), Some(0));

    // Data errors: unreadable or invalid input.
    let missing = dir.path().join("missing.jsonl");
    assert_eq!(tribunal(&["validate", "--input", s(&missing)]).status.code(), Some(2));
    let bad = dir.path().join("bad.jsonl");
    std::fs::write(&bad, "{\"case_id\": 1}\nnot json\n").unwrap();
    let out = tribunal(&["validate", "--input", s(&bad)]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 1") && err.contains("line 2"), "{err}");
    let lex = dir.path().join("lex.csv");
    std::fs::write(&lex, "good,12\n").unwrap();
    let (_d, out) = corpus(20, &[]);
    let status = tribunal(&["extract", "--input", s(&out.join("cases.jsonl")), "--lexicon", s(&lex), "--out", s(&dir.path().join("f.csv"))]).status;
    assert_eq!(status.code(), Some(2));
}
