mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nextword"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn build_mini(dir: &Path) -> Output {
    let corpus = common::fixture("mini_corpus.txt");
    run(&["build", p(&corpus), "--model", p(dir)])
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["--version"]).status.code(), Some(0));
    assert_eq!(run(&["predict", "--help"]).status.code(), Some(0));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(run(&[]).status.code(), Some(1));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    let corpus = common::fixture("mini_corpus.txt");
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("m");
    assert_eq!(
        run(&["build", p(&corpus), "--model", p(&model), "--max-order", "6"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        run(&["build", p(&corpus), "--model", p(&model), "--lambda", "1.5"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(run(&["eval", "--model", p(&model)]).status.code(), Some(1));
    assert_eq!(
        run(&["eval", "--corpus", p(&corpus), "--fraction", "1.5"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(run(&["bench", p(&corpus), "--sizes", "20,10"]).status.code(), Some(1));
}

#[test]
fn build_then_predict() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("m");
    let built = build_mini(&model);
    assert_eq!(
        built.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&built.stderr)
    );
    let report = stdout(&built);
    assert!(
        report.starts_with("order\trank\tngram\tfreq\n1\t1\tbo\t3\n"),
        "{report}"
    );
    assert!(!report.contains("\t</s>\t"));

    let out = run(&["predict", "--model", p(&model), "bo"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), "1\tbazar\t0.666667\t2\n2\tseyran\t0.333333\t2\n");

    let out = run(&["predict", "--model", p(&model), "--k", "2", "--prefix", "e", ""]);
    assert_eq!(stdout(&out), "1\tew\t0.064516\t1\n2\tewan\t0.064516\t1\n");

    let out = run(&["complete", "--model", p(&model), "ew"]);
    assert_eq!(stdout(&out), "1\tew\t0.064516\t1\n2\tewan\t0.064516\t1\n");
}

#[test]
fn io_errors_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope");
    assert_eq!(run(&["predict", "--model", p(&missing), "bo"]).status.code(), Some(3));
    assert_eq!(run(&["clean", p(&missing)]).status.code(), Some(3));
    let model = dir.path().join("m");
    assert_eq!(build_mini(&model).status.code(), Some(0));
    assert_eq!(build_mini(&model).status.code(), Some(3));
    let corpus = common::fixture("mini_corpus.txt");
    assert_eq!(
        run(&["build", p(&corpus), "--model", p(&model), "--force"])
            .status
            .code(),
        Some(0)
    );
}

#[test]
fn data_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.txt");
    fs::write(&bad, b"ok line\nsecond \xff line\n").unwrap();
    let out = run(&["clean", p(&bad)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.txt:2:"));

    let model = dir.path().join("m");
    build_mini(&model);
    let table = model.join("2-gram.tsv");
    let text = fs::read_to_string(&table).unwrap();
    fs::write(&table, text.replacen("\t2\n", "\tx\n", 1)).unwrap();
    let out = run(&["predict", "--model", p(&model), "bo"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("2-gram.tsv:2:"));
}

#[test]
fn clean_writes_sentences_and_stats() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("clean.txt");
    let input = common::fixture("cleaning_50.txt");
    let out = run(&["clean", p(&input), "-o", p(&out_path), "--script-mode", "latin"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    assert!(String::from_utf8_lossy(&out.stderr).contains("56 sentences, 171 tokens, 5 dropped tokens"));
    let cleaned = fs::read_to_string(&out_path).unwrap();
    assert_eq!(cleaned.lines().count(), 56);
    assert!(cleaned.starts_with("ez diçim malê\ntu çawa yî\nez baş im\n"));
}

#[test]
fn eval_and_bench_output_tables() {
    let dir = tempfile::tempdir().unwrap();
    let train = common::fixture("accuracy_train.txt");
    let test = common::fixture("accuracy_test.txt");
    let json = dir.path().join("report.json");
    let out = run(&[
        "eval",
        "--corpus",
        p(&train),
        "--test",
        p(&test),
        "--max-order",
        "2",
        "--report",
        p(&json),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(
        stdout(&out),
        "ngrams\taccuracy\tcorrect\ttotal\n1-gram\t83.33\t35\t42\n2-gram\t90.48\t38\t42\n"
    );
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(report["split"], "file");
    assert_eq!(report["rows"][1]["correct_predictions"], 38);

    let sample = common::data("sample-corpus.txt");
    let out = run(&["bench", p(&sample), "--sizes", "1000,4000", "--max-order", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "tokens\taccuracy\tmean_latency_ms");
    assert!(rows[1].starts_with("1000\t") && rows[2].starts_with("4000\t"));
}

#[test]
fn eval_is_deterministic_given_seed() {
    let sample = common::data("sample-corpus.txt");
    let a = run(&["eval", "--corpus", p(&sample), "--max-order", "3", "--seed", "7"]);
    let b = run(&["eval", "--corpus", p(&sample), "--max-order", "3", "--seed", "7"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}
