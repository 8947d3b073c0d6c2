//! Shared setup for the selector benchmarks.
//!
//! Models are freshly initialized rather than trained: selection cost does
//! not depend on the weights, only on their shapes.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use sieve_core::ansfind::AnsFindTrainConfig;
use sieve_core::bow::BowTrainConfig;
use sieve_core::embedding::DEFAULT_OOV_BUCKETS;
use sieve_core::{
    load_dataset, load_embeddings, AnsFindModel, AnsFindSelector, BowModel, BowSelector, EnsembleSelector,
    EvdMatchSelector, RetrievalBundle, Selector, TfIdfSelector,
};

pub fn fixtures_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub struct Workload {
    pub bundles: Vec<RetrievalBundle>,
    pub selectors: Vec<(&'static str, Box<dyn Selector>)>,
}

/// The QA evaluation split and every built-in selector.
pub fn qa_workload() -> Workload {
    let dir = fixtures_dir().join("qa");
    let bundles = load_dataset(dir.join("eval.jsonl")).expect("qa fixture");
    let table = Arc::new(load_embeddings(dir.join("embeddings.txt"), DEFAULT_OOV_BUCKETS).expect("qa embeddings"));
    let bow_cfg = BowTrainConfig::default();
    let af_cfg = AnsFindTrainConfig::default();
    let bow = BowModel::init(table.dim(), bow_cfg.hidden, bow_cfg.seed);
    let af = Arc::new(AnsFindModel::init(
        table.dim(),
        af_cfg.hidden,
        af_cfg.init_scale,
        af_cfg.seed,
    ));
    let selectors: Vec<(&'static str, Box<dyn Selector>)> = vec![
        ("tfidf", Box::new(TfIdfSelector)),
        ("bow", Box::new(BowSelector::new(bow, table.clone()).unwrap())),
        (
            "ansfind-only",
            Box::new(AnsFindSelector::new(af.clone(), table.clone()).unwrap()),
        ),
        ("evdmatch-only", Box::new(EvdMatchSelector)),
        ("ensemble", Box::new(EnsembleSelector::new(af, table).unwrap())),
    ];
    Workload { bundles, selectors }
}
