//! The bundled fixtures are reproducible from the generator and valid.

use std::fs;
use std::path::{Path, PathBuf};

use sieve_core::synth::write_fixtures;
use sieve_core::{load_dataset, load_embeddings};

fn bundled() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

const FILES: [&str; 6] = [
    "qa/train.jsonl",
    "qa/eval.jsonl",
    "qa/embeddings.txt",
    "separable/train.jsonl",
    "separable/heldout.jsonl",
    "separable/embeddings.txt",
];

#[test]
fn regeneration_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    write_fixtures(dir.path()).unwrap();
    for f in FILES {
        let fresh = fs::read(dir.path().join(f)).unwrap();
        let shipped = fs::read(bundled().join(f)).unwrap();
        assert!(fresh == shipped, "{f} differs from the generator output");
    }
}

#[test]
fn fixtures_validate() {
    let qa_eval = load_dataset(bundled().join("qa/eval.jsonl")).unwrap();
    assert_eq!(qa_eval.len(), 200);
    assert!(qa_eval.iter().all(|b| !b.answers.is_empty()));
    let table = load_embeddings(bundled().join("qa/embeddings.txt"), 4096).unwrap();
    assert_eq!(table.dim(), 16);
    let sep = load_dataset(bundled().join("separable/heldout.jsonl")).unwrap();
    assert_eq!(sep.len(), 200);
}
