//! End-to-end behavior of the `sieve` binary outside the acceptance suite.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use sieve_core::corpus::{bundle_to_json, Document, RetrievalBundle};
use sieve_core::synth::markup;

const SIEVE: &str = env!("CARGO_BIN_EXE_sieve");
const STUB: &str = env!("CARGO_BIN_EXE_sieve-stub");

fn fixture(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(rel)
}

fn sieve(args: &[&str]) -> Output {
    Command::new(SIEVE)
        .args(args)
        .env("SIEVE_LOG", "error")
        .output()
        .unwrap()
}

fn ok_json(args: &[&str]) -> Value {
    let out = sieve(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

fn json_lines(bytes: &[u8]) -> Vec<Value> {
    String::from_utf8_lossy(bytes)
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

/// One question over a single three-sentence document.
fn tiny_dataset(dir: &Path) -> PathBuf {
    let sentences = [
        "[NP:PERSON Anna Berg] wrote [NP the novel] .",
        "[NP The river] runs [NP north] .",
        "[NP Anna] lived in [NP:LOCATION Oslo] .",
    ];
    let doc_id = "t-d1".to_string();
    let sentences = sentences
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let mut s = markup(s);
            s.doc_id = doc_id.clone();
            s.sentence_index = i;
            s
        })
        .collect();
    let bundle = RetrievalBundle {
        question_id: "t".into(),
        question: markup("Who wrote [NP the novel] ?"),
        documents: vec![Document {
            doc_id,
            rank: 1,
            sentences,
        }],
        answers: vec!["Anna Berg".into()],
    };
    let path = dir.join("tiny.jsonl");
    fs::write(&path, bundle_to_json(&bundle) + "\n").unwrap();
    path
}

#[test]
fn missing_files_and_bad_values_are_usage_errors() {
    let out = sieve(&["select", "--dataset", "/nonexistent.jsonl", "--selector", "tfidf"]);
    assert_eq!(out.status.code(), Some(2));
    let ds = fixture("separable/heldout.jsonl");
    let out = sieve(&["select", "--dataset", ds.to_str().unwrap(), "--selector", "magic"]);
    assert_eq!(out.status.code(), Some(2));
    let out = sieve(&["select", "--dataset", ds.to_str().unwrap(), "--selector", "bow"]);
    assert_eq!(out.status.code(), Some(2), "bow without embeddings");
    let out = sieve(&[
        "select",
        "--dataset",
        ds.to_str().unwrap(),
        "--selector",
        "tfidf",
        "--k-sentences",
        "0",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn validate_summarizes_inputs() {
    let v = ok_json(&[
        "validate",
        "--dataset",
        fixture("qa/eval.jsonl").to_str().unwrap(),
        "--embeddings",
        fixture("qa/embeddings.txt").to_str().unwrap(),
    ]);
    assert_eq!(v["questions"], 200);
    assert_eq!(v["embedding_dim"], 16);
    let bad = tempfile::NamedTempFile::new().unwrap();
    fs::write(bad.path(), "{not json\n").unwrap();
    let out = sieve(&["validate", "--dataset", bad.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn large_k_returns_every_sentence() {
    let dir = tempfile::tempdir().unwrap();
    let ds = tiny_dataset(dir.path());
    let out = sieve(&[
        "select",
        "--dataset",
        ds.to_str().unwrap(),
        "--selector",
        "tfidf",
        "--k-sentences",
        "50",
    ]);
    assert!(out.status.success());
    let lines = json_lines(&out.stdout);
    assert_eq!(lines.len(), 1);
    assert_eq!(lines[0]["selected"].as_array().unwrap().len(), 3);
    assert_eq!(lines[0]["selected"][0]["sentence_index"], 0);
}

#[test]
fn external_scores_decide_the_order() {
    let dir = tempfile::tempdir().unwrap();
    let ds = tiny_dataset(dir.path());
    let adapter = format!("{STUB} --mode fixed --scores 3,1,2");
    let out = sieve(&[
        "select",
        "--dataset",
        ds.to_str().unwrap(),
        "--selector",
        "external",
        "--adapter",
        &adapter,
        "--k-sentences",
        "3",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let lines = json_lines(&out.stdout);
    let order: Vec<u64> = lines[0]["selected"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s["sentence_index"].as_u64().unwrap())
        .collect();
    assert_eq!(order, [0, 2, 1]);
}

#[test]
fn reader_answers_are_scored() {
    let dir = tempfile::tempdir().unwrap();
    let ds = tiny_dataset(dir.path());
    let reader = format!("{STUB} --role reader");
    let v = ok_json(&[
        "eval",
        "--dataset",
        ds.to_str().unwrap(),
        "--selector",
        "tfidf",
        "--k-sentences",
        "1",
        "--reader",
        &reader,
    ]);
    let r = &v["reports"][0];
    assert_eq!(r["recall"], 100.0);
    assert_eq!(r["em"], 100.0);
    assert_eq!(r["f1"], 100.0);
}

#[test]
fn recall_is_complete_when_every_sentence_is_kept() {
    let ds = fixture("separable/heldout.jsonl");
    let v = ok_json(&[
        "eval",
        "--dataset",
        ds.to_str().unwrap(),
        "--selector",
        "tfidf",
        "--k-sentences",
        "1000",
    ]);
    assert_eq!(v["reports"][0]["recall"], 100.0);
    assert_eq!(v["retrieval_upper_bound"], 100.0);
    assert!(v["reports"][0].get("em").is_none());
}

#[test]
fn csv_has_one_row_per_question_and_selector() {
    let ds = fixture("separable/heldout.jsonl");
    let out = sieve(&[
        "eval",
        "--dataset",
        ds.to_str().unwrap(),
        "--selector",
        "tfidf",
        "--selector",
        "evdmatch-only",
        "--format",
        "csv",
    ]);
    assert!(out.status.success());
    let mut r = csv::Reader::from_reader(out.stdout.as_slice());
    assert_eq!(
        r.headers().unwrap().iter().collect::<Vec<_>>(),
        ["question_id", "selector", "recall_hit", "em", "f1", "latency_ms"]
    );
    assert_eq!(r.records().count(), 400);
}

#[test]
fn bench_sample_depends_only_on_seed() {
    let ds = fixture("qa/eval.jsonl");
    let run = |seed: &str| {
        let v = ok_json(&[
            "bench",
            "--dataset",
            ds.to_str().unwrap(),
            "--selector",
            "tfidf",
            "--sample",
            "20",
            "--seed",
            seed,
        ]);
        let b = v["benchmarks"][0].clone();
        assert!(b["questions_per_second"].as_f64().unwrap() > 0.0);
        b["sampled_ids"].clone()
    };
    let a = run("5");
    assert_eq!(a.as_array().unwrap().len(), 20);
    assert_eq!(a, run("5"));
    assert_ne!(a, run("6"));
}
