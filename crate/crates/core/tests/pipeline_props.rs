//! Pipeline and evaluation invariants over random bundles.

mod common;

use proptest::prelude::*;
use sieve_core::metrics::{exact_match, f1_score};
use sieve_core::pipeline::{evaluate, retrieval_upper_bound, run_pipeline, PipelineConfig};
use sieve_core::{EvdMatchSelector, RetrievalBundle, TfIdfSelector};

fn dataset() -> impl Strategy<Value = Vec<RetrievalBundle>> {
    prop::collection::vec(common::bundle_strategy(4, 4), 1..8).prop_map(|mut bs| {
        for (i, b) in bs.iter_mut().enumerate() {
            b.question_id = format!("q{i}");
        }
        bs
    })
}

fn recall(bundles: &[RetrievalBundle], k_sentences: usize, k_documents: usize) -> f64 {
    let cfg = PipelineConfig {
        k_sentences,
        k_documents,
        workers: 1,
    };
    let r = run_pipeline(bundles, &TfIdfSelector, None, &cfg).unwrap();
    evaluate(&r, bundles, false).unwrap().recall
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn recall_is_monotone_in_k(bundles in dataset()) {
        let mut prev = 0.0;
        for k in 1..=17 {
            let r = recall(&bundles, k, 50);
            prop_assert!(r >= prev);
            prev = r;
        }
        prop_assert!((prev - retrieval_upper_bound(&bundles, 50)).abs() < 1e-9);
        let mut prev = 0.0;
        for d in 1..=4 {
            // Uncapped selection: extra documents can only add sentences.
            let r = recall(&bundles, usize::MAX, d);
            prop_assert!(r >= prev);
            prop_assert!((r - retrieval_upper_bound(&bundles, d)).abs() < 1e-9);
            prev = r;
        }
    }

    #[test]
    fn workers_and_reruns_give_identical_selections(bundles in dataset(), workers in 2usize..5) {
        let strip = |cfg: &PipelineConfig| -> Vec<_> {
            run_pipeline(&bundles, &EvdMatchSelector, None, cfg)
                .unwrap()
                .into_iter()
                .map(|r| (r.question_id, r.selected, r.context))
                .collect()
        };
        let one = strip(&PipelineConfig::default());
        prop_assert_eq!(&one, &strip(&PipelineConfig::default()));
        prop_assert_eq!(&one, &strip(&PipelineConfig { workers, ..PipelineConfig::default() }));
    }

    #[test]
    fn em_never_exceeds_f1(pred in "[a-c ]{0,8}", gold in prop::collection::vec("[a-c ]{1,8}", 1..3)) {
        let em = if exact_match(&pred, &gold) { 1.0 } else { 0.0 };
        let f1 = f1_score(&pred, &gold);
        prop_assert!(em <= f1 + 1e-12 && f1 <= 1.0);
    }
}
