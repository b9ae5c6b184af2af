use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use simtune_cli::commands::{run_file_name, EVAL_JSON, REPORT_JSON, RUNS_DIR};
use simtune_cli::files::{OsFiles, TracingFiles};
use simtune_cli::main_with;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/mini").join(name)
}

fn sh(args: &[&str]) -> String {
    let mut out = Vec::new();
    let argv = std::iter::once("simtune").chain(args.iter().copied());
    main_with(argv, &OsFiles, &mut out).unwrap_or_else(|e| panic!("{args:?}: {e:#}"));
    String::from_utf8(out).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn mini_index(dir: &Path) -> PathBuf {
    let index = dir.join("mini.idx");
    sh(&["index", "--corpus", p(&fixture("corpus.jsonl")), "--out", p(&index)]);
    index
}

/// Every file under `dir` with its bytes, by relative path.
fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let path = e.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.push((rel, fs::read(&path).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn select_into(index: &Path, topics: &Path, configs: &str, out: &Path, jobs: &str) -> String {
    sh(&["select", "--index", p(index), "--topics", p(topics), "--configs", configs, "--out", p(out), "--jobs", jobs])
}

#[test]
fn index_jsonl_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.idx");
    let summary = sh(&["index", "--corpus", p(&fixture("corpus.jsonl")), "--out", p(&out)]);
    assert!(summary.starts_with("N=20 "), "{summary}");
    assert!(out.exists());
}

#[test]
fn index_trec_summary() {
    let dir = tempfile::tempdir().unwrap();
    let summary = sh(&[
        "index",
        "--format",
        "trec",
        "--corpus",
        p(&fixture("corpus.trec")),
        "--out",
        p(&dir.path().join("t.idx")),
    ]);
    assert!(summary.starts_with("N=2 "), "{summary}");
}

#[test]
fn three_doc_jsonl() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("c.jsonl");
    fs::write(
        &corpus,
        "{\"id\":\"a\",\"text\":\"x y\"}\n{\"id\":\"b\",\"text\":\"y z\"}\n{\"id\":\"c\",\"text\":\"z\"}\n",
    )
    .unwrap();
    let summary = sh(&["index", "--corpus", p(&corpus), "--out", p(&dir.path().join("c.idx"))]);
    assert!(summary.contains("N=3"), "{summary}");
}

#[test]
fn binary_reports_missing_file() {
    let out = Command::new(env!("CARGO_BIN_EXE_simtune"))
        .args(["index", "--corpus", "/nonexistent/corpus.jsonl", "--out", "/tmp/never.idx"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("/nonexistent/corpus.jsonl"), "{stderr}");
}

#[test]
fn binary_rejects_zero_depth() {
    let out = Command::new(env!("CARGO_BIN_EXE_simtune"))
        .args(["select", "--index", "i", "--topics", "t", "--out", "o", "--k", "0"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn binary_exit_code_for_selection_errors() {
    let dir = tempfile::tempdir().unwrap();
    let index = mini_index(dir.path());
    let topics = dir.path().join("empty.tsv");
    fs::write(&topics, "q1\tthe of\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_simtune"))
        .args(["select", "--index", p(&index), "--topics", p(&topics), "--out", p(&dir.path().join("o"))])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(i32::from(simtune_cli::EXIT_SELECTION)));
    assert!(String::from_utf8_lossy(&out.stderr).contains("empty after analysis"));
}

#[test]
fn config_sets() {
    let usecase1 = sh(&["configs", "list", "--set", "usecase1"]);
    assert_eq!(usecase1.lines().count(), 6);
    assert_eq!(sh(&["configs", "list", "--set", "dfr-grid"]).lines().count(), 105);
    assert_eq!(sh(&["configs", "list", "--grid", "dfr"]).lines().count(), 105);
    assert_eq!(sh(&["configs", "list", "--grid", "ib"]).lines().count(), 20);
    assert_eq!(sh(&["configs", "list", "--usecase1"]), usecase1);
    assert_eq!(sh(&["configs", "list", "--set", "dfr-grid+bm25"]).lines().count(), 106);
    assert_eq!(sh(&["configs", "list", "--set", "bm25:k1=0.9 lmd:mu=500"]), "bm25:k1=0.9,b=0.75\nlmd:mu=500\n");

    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("configs.txt");
    fs::write(&file, "# candidates\nbm25\n\ndfr:IN:L:H1  # comment\n").unwrap();
    let listed = sh(&["configs", "list", "--set", &format!("@{}", p(&file))]);
    assert_eq!(listed, "bm25:k1=1.2,b=0.75\ndfr:IN:L:H1\n");
}

#[test]
fn search_prints_trec_lines() {
    let dir = tempfile::tempdir().unwrap();
    let index = mini_index(dir.path());
    let out = sh(&["search", "--index", p(&index), "--k", "2", "rooftop", "solar"]);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("query Q0 d04 1 "), "{out}");
}

#[test]
fn select_usecase1_writes_everything() {
    let dir = tempfile::tempdir().unwrap();
    let index = mini_index(dir.path());
    let out = dir.path().join("sel");
    let chosen = select_into(&index, &fixture("topics.tsv"), "usecase1", &out, "2");
    let report: serde_json::Value = serde_json::from_slice(&fs::read(out.join(REPORT_JSON)).unwrap()).unwrap();
    assert_eq!(report["configs"].as_array().unwrap().len(), 6);
    assert_eq!(report["chosen"].as_str().unwrap(), chosen.trim());
    assert_eq!(report["skipped_queries"], serde_json::json!(["q6"]));
    assert_eq!(report["settings"]["depth"], 100);
    for i in 0..6 {
        assert!(out.join(RUNS_DIR).join(run_file_name(i, 6)).exists());
    }
    let likelihoods = fs::read_to_string(out.join("qpp/likelihoods.tsv")).unwrap();
    assert_eq!(likelihoods.lines().count(), 1 + 5 * 6);
    let weights = fs::read_to_string(out.join("qpp/weights.tsv")).unwrap();
    assert_eq!(weights.lines().count(), 1 + 5);
}

#[test]
fn select_is_deterministic_across_runs_and_jobs() {
    let dir = tempfile::tempdir().unwrap();
    let index = mini_index(dir.path());
    let topics = fixture("topics.tsv");
    let out = dir.path().join("sel");
    select_into(&index, &topics, "usecase1", &out, "1");
    let first = snapshot(&out);
    fs::remove_dir_all(&out).unwrap();
    select_into(&index, &topics, "usecase1", &out, "3");
    assert_eq!(first, snapshot(&out));
}

#[test]
fn select_dfr_grid_plus_bm25() {
    let dir = tempfile::tempdir().unwrap();
    let index = mini_index(dir.path());
    let out = dir.path().join("sel");
    select_into(&index, &fixture("topics.tsv"), "dfr-grid+bm25", &out, "2");
    let report: serde_json::Value = serde_json::from_slice(&fs::read(out.join(REPORT_JSON)).unwrap()).unwrap();
    assert_eq!(report["configs"].as_array().unwrap().len(), 106);
    assert_eq!(fs::read_dir(out.join(RUNS_DIR)).unwrap().count(), 106);
}

#[test]
fn select_never_reads_qrels() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    fs::create_dir(&data).unwrap();
    let topics = data.join("topics.tsv");
    fs::copy(fixture("topics.tsv"), &topics).unwrap();
    let index = mini_index(&data);

    let run = |out: &Path| {
        let files = TracingFiles::new(OsFiles);
        let argv = [
            "simtune",
            "select",
            "--index",
            p(&index),
            "--topics",
            p(&topics),
            "--configs",
            "usecase1",
            "--out",
            p(out),
        ];
        main_with(argv, &files, &mut Vec::new()).unwrap();
        files.accessed()
    };
    let without = dir.path().join("without");
    let accessed = run(&without);
    assert_eq!(accessed, [index.clone(), topics.clone()]);

    let qrels = data.join("qrels.txt");
    fs::copy(fixture("qrels.txt"), &qrels).unwrap();
    let with = dir.path().join("with");
    let accessed = run(&with);
    assert!(!accessed.contains(&qrels));

    let strip_out = |mut s: Vec<(String, Vec<u8>)>| {
        s.retain(|(name, _)| name != "manifest.json");
        s
    };
    assert_eq!(strip_out(snapshot(&without)), strip_out(snapshot(&with)));
}

#[test]
fn eval_after_select() {
    let dir = tempfile::tempdir().unwrap();
    let index = mini_index(dir.path());
    let out = dir.path().join("sel");
    select_into(&index, &fixture("topics.tsv"), "usecase1", &out, "1");
    let line = sh(&["eval", "--run-dir", p(&out), "--qrels", p(&fixture("qrels.txt"))]);
    assert!(line.contains("kendall_tau="), "{line}");
    let eval: serde_json::Value = serde_json::from_slice(&fs::read(out.join(EVAL_JSON)).unwrap()).unwrap();
    assert_eq!(eval["configs"].as_array().unwrap().len(), 6);
    assert_eq!(eval["excluded_queries"], serde_json::json!(["q6"]));
    let tau = eval["kendall_tau"].as_f64().unwrap();
    assert!((-1.0..=1.0).contains(&tau));
    assert!(eval["lift_vs_optimal"].as_f64().unwrap() <= 1.0);
    assert!(fs::read_to_string(out.join("eval.tsv")).unwrap().contains("map_lift_vs_random"));
}

#[test]
fn eval_rejects_mismatched_queries() {
    let dir = tempfile::tempdir().unwrap();
    let index = mini_index(dir.path());
    let out = dir.path().join("sel");
    select_into(&index, &fixture("topics.tsv"), "usecase1", &out, "1");
    let qrels = dir.path().join("qrels.txt");
    let mut text = fs::read_to_string(fixture("qrels.txt")).unwrap();
    text.push_str("q99 0 d01 1\n");
    fs::write(&qrels, text).unwrap();
    let argv = ["simtune", "eval", "--run-dir", p(&out), "--qrels", p(&qrels)];
    let err = main_with(argv, &OsFiles, &mut Vec::new()).unwrap_err();
    assert!(format!("{err:#}").contains("q99"), "{err:#}");
}

#[test]
fn gen_synthetic_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let args = |out: &Path| {
        sh(&["gen-synthetic", "--seed", "9", "--n-docs", "400", "--n-queries", "8", "--out", p(out)]);
    };
    args(&a);
    args(&b);
    assert_eq!(snapshot(&a), snapshot(&b));
    assert!(a.join("qrels.txt").exists());
}

#[test]
fn qpp_dump_tables() {
    let dir = tempfile::tempdir().unwrap();
    let index = mini_index(dir.path());
    let topics = fixture("topics.tsv");
    let base = ["qpp", "dump", "--index", p(&index), "--topics", p(&topics)];
    let likelihoods = sh(&[&base[..], &["--table", "likelihoods"]].concat());
    assert_eq!(likelihoods.lines().count(), 1 + 5 * 6);
    let focus = sh(&[&base[..], &["--table", "focus"]].concat());
    assert_eq!(focus.lines().count(), 1 + 20);
    let file = dir.path().join("w.tsv");
    sh(&[&base[..], &["--table", "weights", "--out", p(&file)]].concat());
    assert!(fs::read_to_string(&file).unwrap().starts_with("query_id\tdifficulty"));
}
