use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use natner::corpus::parse_conll;

fn fixture(p: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(p)
}

fn natner(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_natner")).args(args).output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn analyze_errors_matches_golden() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.csv");
    let o = natner(&["analyze-errors", s(&fixture("cli/noisy.conll")), s(&fixture("cli/clean.conll")), "--out", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let got = std::fs::read_to_string(&out).unwrap();
    assert_eq!(got, std::fs::read_to_string(fixture("cli/analyze.golden.csv")).unwrap());
    assert_eq!(got.lines().nth(1), Some("i;l;substitution;3"));
}

#[test]
fn analyze_errors_rejects_mismatch_and_handles_identity() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.csv");
    let o = natner(&["analyze-errors", s(&fixture("cli/mismatch.conll")), s(&fixture("cli/clean.conll")), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("segment 0"), "{}", stderr(&o));
    assert!(!out.exists());

    let clean = fixture("cli/clean.conll");
    let o = natner(&["analyze-errors", s(&clean), s(&clean), "--out", s(&out)]);
    assert!(o.status.success());
    assert_eq!(std::fs::read_to_string(&out).unwrap(), "recognized;correct;type;frequency\n");
}

#[test]
fn inject_double_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.conll"), dir.path().join("b.conll"));
    let src = fixture("cli/ads34.conll");
    for out in [&a, &b] {
        let o = natner(&["inject", s(&src), "--double", "--seed", "4", "--out", s(out)]);
        assert!(o.status.success(), "{}", stderr(&o));
        assert_eq!(stdout(&o).trim(), "68 segments written");
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let c = parse_conll(&std::fs::read_to_string(&a).unwrap()).unwrap();
    assert_eq!(c.segment_count(), 68);

    let missing = dir.path().join("none.csv");
    let o = natner(&["inject", s(&src), s(&missing), "--out", s(&dir.path().join("c.conll"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!dir.path().join("c.conll").exists());
}

#[test]
fn split_writes_parts_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("parts");
    let o = natner(&["split", s(&fixture("cli/ads34.conll")), "--seed", "1", "--out", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let sizes: Vec<usize> = ["train", "test", "val"]
        .iter()
        .map(|p| parse_conll(&std::fs::read_to_string(out.join(format!("{p}.conll"))).unwrap()).unwrap().segment_count())
        .collect();
    assert_eq!(sizes, [24, 7, 3]);
    let text = stdout(&o);
    assert!(text.contains("train") && text.contains("SKILL"), "{text}");

    let o = natner(&["split", s(&fixture("cli/ads34.conll")), "--ratios", "0.5,0.5,0.5", "--out", s(&dir.path().join("bad"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!dir.path().join("bad").exists());
}

#[test]
fn counts_matches_golden() {
    let o = natner(&["counts", s(&fixture("cli/ads34.conll"))]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), std::fs::read_to_string(fixture("cli/counts.golden.csv")).unwrap());
}

#[test]
fn evaluate_identical_is_perfect() {
    let g = fixture("cli/ads34.conll");
    let o = natner(&["evaluate", s(&g), s(&g)]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "precision 1.0000 recall 1.0000 f1 1.0000");
    let o = natner(&["evaluate", s(&g)]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn train_tag_and_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let parts = dir.path().join("parts");
    assert!(natner(&["split", s(&fixture("cli/ads34.conll")), "--out", s(&parts)]).status.success());
    let model = dir.path().join("m.bin");
    let curves = dir.path().join("curve.csv");
    let o = natner(&[
        "train",
        "--variant",
        "artificial",
        "--clean-train",
        s(&parts.join("train.conll")),
        "--val",
        s(&parts.join("val.conll")),
        "--epochs",
        "6",
        "--patience",
        "2",
        "--out",
        s(&model),
        "--curves",
        s(&curves),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("artificial: trained on 48 segments"), "{}", stdout(&o));
    assert!(std::fs::read_to_string(&curves).unwrap().lines().count() >= 2);

    let tagged = dir.path().join("tagged.conll");
    assert!(natner(&["tag", s(&parts.join("test.conll")), "--model", s(&model), "--out", s(&tagged)]).status.success());
    let report = dir.path().join("r.json");
    let o = natner(&["evaluate", s(&parts.join("test.conll")), s(&tagged), "--out", s(&report)]);
    assert!(o.status.success());
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert!(json["f1"].as_f64().is_some());

    let o = natner(&[
        "train",
        "--variant",
        "noisy",
        "--clean-train",
        s(&parts.join("train.conll")),
        "--val",
        s(&parts.join("val.conll")),
        "--out",
        s(&dir.path().join("n.bin")),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn experiment_writes_bundle() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = natner(&[
        "experiment",
        "--config",
        s(&fixture("synthetic/experiment.cfg")),
        "--epochs",
        "6",
        "--patience",
        "2",
        "--out",
        s(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["report.json", "accuracy.csv", "accuracy_entities.csv", "confusion.csv", "data_amount.csv"] {
        assert!(std::fs::metadata(out.join(f)).unwrap().len() > 0, "{f}");
    }
    assert_eq!(stdout(&o).lines().count(), 3);
}

#[test]
fn help_lists_defaults() {
    let o = natner(&["experiment", "--help"]);
    let text = stdout(&o);
    for d in ["[default: 25]", "[default: 5]", "[default: 0.10]", "[default: 0.7,0.2,0.1]"] {
        assert!(text.contains(d), "missing {d}");
    }
}

#[test]
fn usage_errors_exit_two_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o.conll");
    assert_eq!(natner(&["inject", "--no-such-flag"]).status.code(), Some(2));
    assert_eq!(natner(&["frobnicate"]).status.code(), Some(2));
    let o = natner(&["inject", s(&dir.path().join("missing.conll")), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("error:"));
    assert!(!out.exists());
    let bad = dir.path().join("bad.conll");
    std::fs::write(&bad, "word\tX-FOO\n").unwrap();
    let o = natner(&["counts", s(&bad)]);
    assert_eq!(o.status.code(), Some(2));
}
