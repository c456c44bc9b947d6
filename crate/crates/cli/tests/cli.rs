//! End-to-end checks of the `mwemine` binary: subcommand plumbing, output
//! formats and the 0/1/2 exit-code convention.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mwemine"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/toy")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

#[test]
fn extract_writes_candidate_tsv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("candidates.tsv");
    let output = run(&[
        "extract",
        "--input",
        fixtures().join("source.tagged").to_str().unwrap(),
        "--patterns",
        fixtures().join("patterns.source").to_str().unwrap(),
        "--tagset",
        "bnc",
        "--min-freq",
        "2",
        "--output",
        out.to_str().unwrap(),
    ]);
    assert!(output.status.success());
    let text = fs::read_to_string(&out).unwrap();
    assert!(
        text.lines().any(|l| l.starts_with("european commission\t")),
        "candidates were:\n{text}"
    );
    for line in text.lines() {
        assert_eq!(line.split('\t').count(), 4);
    }
}

#[test]
fn extract_accepts_tagset_mapping_file() {
    let dir = tempfile::tempdir().unwrap();
    let tagset = dir.path().join("custom.tsv");
    fs::write(&tagset, "AJ0\tADJ\nNN1\tNOUN\n").unwrap();
    let output = run(&[
        "extract",
        "--input",
        fixtures().join("source.tagged").to_str().unwrap(),
        "--patterns",
        fixtures().join("patterns.source").to_str().unwrap(),
        "--tagset",
        tagset.to_str().unwrap(),
        "--min-freq",
        "2",
    ]);
    assert!(output.status.success());
    assert!(stdout(&output).contains("european commission"));
}

#[test]
fn bleu_prints_seven_column_row() {
    let dir = tempfile::tempdir().unwrap();
    let cand = dir.path().join("cand.txt");
    let reference = dir.path().join("ref.txt");
    fs::write(&cand, "the quick brown fox jumps\n").unwrap();
    fs::write(&reference, "the quick brown fox jumps\n").unwrap();
    let output = run(&[
        "bleu",
        "--cand",
        cand.to_str().unwrap(),
        "--ref",
        reference.to_str().unwrap(),
    ]);
    assert!(output.status.success());
    let text = stdout(&output);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "1-gram\t2-gram\t3-gram\t4-gram\tBP\tratio\toverall");
    let row: Vec<&str> = lines.next().unwrap().split('\t').collect();
    assert_eq!(row, vec!["100.0", "100.0", "100.0", "100.0", "1.000", "1.000", "100.00"]);
}

#[test]
fn filter_threshold_out_of_range_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let pairs = dir.path().join("pairs.tsv");
    fs::write(&pairs, "a\tb\t0.500000\n").unwrap();
    let output = run(&["filter", "--input", pairs.to_str().unwrap(), "--threshold", "1.5"]);
    assert_eq!(output.status.code(), Some(1));
}

#[test]
fn malformed_pair_file_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let pairs = dir.path().join("pairs.tsv");
    fs::write(&pairs, "a\tb\tnot-a-score\n").unwrap();
    let output = run(&["filter", "--input", pairs.to_str().unwrap(), "--threshold", "0.5"]);
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn unknown_flag_exits_1_and_help_exits_0() {
    let output = run(&["filter", "--bogus"]);
    assert_eq!(output.status.code(), Some(1));
    let output = run(&["--help"]);
    assert_eq!(output.status.code(), Some(0));
    assert!(stdout(&output).contains("pipeline"));
}

#[test]
fn stats_reports_retention_percentages() {
    let dir = tempfile::tempdir().unwrap();
    let pairs = dir.path().join("pairs.tsv");
    let mut text = String::new();
    for i in 0..10 {
        let score = if i < 8 { 0.9 } else { 0.2 };
        text.push_str(&format!("s{i}\tt{i}\t{score:.6}\n"));
    }
    fs::write(&pairs, text).unwrap();
    let output = run(&["stats", "--input", pairs.to_str().unwrap(), "--thresholds", "0.70,0.85"]);
    assert!(output.status.success());
    let table = stdout(&output);
    assert!(table.contains("threshold\tinput\tkept\tretention_percent"));
    assert!(table.contains("0.70\t10\t8\t80.0"), "table was:\n{table}");
}

#[test]
fn bpe_learn_and_apply_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus.txt");
    fs::write(&corpus, "low lower lowest low low newer new\n").unwrap();
    let merges = dir.path().join("merges.txt");
    let output = run(&[
        "bpe-learn",
        "--input",
        corpus.to_str().unwrap(),
        "--ops",
        "10",
        "--output",
        merges.to_str().unwrap(),
    ]);
    assert!(output.status.success());

    let encoded = dir.path().join("encoded.txt");
    let output = run(&[
        "bpe-apply",
        "--input",
        corpus.to_str().unwrap(),
        "--merges",
        merges.to_str().unwrap(),
        "--output",
        encoded.to_str().unwrap(),
    ]);
    assert!(output.status.success());
    let decoded = fs::read_to_string(&encoded).unwrap().replace("@@ ", "");
    assert_eq!(decoded, fs::read_to_string(&corpus).unwrap());
}

#[test]
fn pipeline_runs_and_resumes_from_config() {
    let work = tempfile::tempdir().unwrap();
    for entry in fs::read_dir(fixtures()).unwrap() {
        let entry = entry.unwrap();
        if entry.file_type().unwrap().is_file() {
            fs::copy(entry.path(), work.path().join(entry.file_name())).unwrap();
        }
    }
    let config = work.path().join("config.toml");
    let output = run(&["--workers", "2", "pipeline", "--config", config.to_str().unwrap()]);
    assert!(output.status.success(), "stderr: {}", String::from_utf8_lossy(&output.stderr));
    let first = stdout(&output);
    assert!(first.lines().count() >= 6);
    assert!(first.contains("ran"));

    let output = run(&["pipeline", "--config", config.to_str().unwrap()]);
    assert!(output.status.success());
    let second = stdout(&output);
    assert!(second.lines().all(|l| l.contains("up to date")), "got:\n{second}");
}

#[test]
fn missing_config_exits_1() {
    let output = run(&["pipeline", "--config", "/nonexistent/config.toml"]);
    assert_eq!(output.status.code(), Some(1));
}
