mod common;

use std::path::Path;
use std::process::{Command, Output};

use common::fixture;

fn dialex(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dialex"))
        .args(args)
        .env_remove("DIALEX_API_KEY")
        .output()
        .unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn evaluate(strategy: &str, out: &Path, mock: &Path) -> Output {
    let data = fixture("multiwoz21");
    dialex(&[
        "evaluate", "--dataset", "multiwoz21", "--data-dir", s(&data), "--strategy", strategy, "--mock", s(mock),
        "--out", s(out),
    ])
}

#[test]
fn evaluate_report_rescore_analyze() {
    let dir = tempfile::tempdir().unwrap();
    let mock = fixture("mock/multiwoz21_test.json");
    let base = dir.path().join("vanilla.jsonl");
    let cand = dir.path().join("self.jsonl");
    let o = evaluate("vanilla", &base, &mock);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("66.67"), "{}", stdout(&o));
    assert_eq!(evaluate("self_explanation", &cand, &mock).status.code(), Some(0));

    let o = dialex(&["report", "--layout", "main", "--format", "csv", "--in", s(&base), s(&cand)]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "Method,MultiWOZ 2.1\nVanilla,66.67\nSelf-Explanation,66.67\n");

    let rescored = dir.path().join("strict.jsonl");
    let o = dialex(&["rescore", "--in", s(&base), "--out", s(&rescored), "--strict-keys"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("50.00"), "{}", stdout(&o));

    let cases = dir.path().join("cases.jsonl");
    let o = dialex(&["analyze", "--baseline", s(&base), "--candidate", s(&rescored), "--out", s(&cases)]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("| Total | 0 | 1 |"), "{}", stdout(&o));
    let lines = std::fs::read_to_string(&cases).unwrap();
    assert_eq!(lines.lines().count(), 1);
    assert!(lines.contains("\"won_by\":\"baseline\""));
}

#[test]
fn stats_prints_corpus_figures() {
    let o = dialex(&["stats", "--dataset", "meld", "--data-dir", s(&fixture("meld"))]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("dialogues: 1"), "{out}");
    assert!(out.contains("turns: 3"), "{out}");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o.jsonl");
    // Usage and configuration errors.
    assert_eq!(dialex(&["evaluate"]).status.code(), Some(1));
    assert_eq!(dialex(&["--help"]).status.code(), Some(0));
    let o = dialex(&[
        "evaluate", "--dataset", "meld", "--data-dir", s(&fixture("meld")), "--strategy", "vanilla", "--shots", "3",
        "--mock", s(&fixture("mock/multiwoz21_test.json")), "--out", s(&out),
    ]);
    assert_eq!(o.status.code(), Some(1));
    let o = dialex(&[
        "evaluate", "--dataset", "meld", "--data-dir", s(&fixture("meld")), "--strategy", "vanilla", "--out", s(&out),
    ]);
    assert_eq!(o.status.code(), Some(1), "missing API key");
    // Data errors.
    let o = dialex(&["stats", "--dataset", "sgd", "--data-dir", s(&dir.path().join("none"))]);
    assert_eq!(o.status.code(), Some(2));
    // Every provider call failing.
    let empty = dir.path().join("empty.json");
    std::fs::write(&empty, "{}").unwrap();
    let o = dialex(&[
        "evaluate", "--dataset", "meld", "--data-dir", s(&fixture("meld")), "--strategy", "vanilla", "--mock",
        s(&empty), "--out", s(&out),
    ]);
    assert_eq!(o.status.code(), Some(3));
}
