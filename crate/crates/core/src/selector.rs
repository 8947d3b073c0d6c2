//! The selector contract and deterministic top-k selection.

use std::cmp::Ordering;

use thiserror::Error;

use crate::adapter::AdapterError;
use crate::corpus::{AnnotatedSentence, CorpusError, Document, RetrievalBundle};
use crate::modelio::ModelIoError;

#[derive(Debug, Error)]
pub enum SelectError {
    #[error("non-finite selection score {0}")]
    NonFinite(f64),
    #[error("document `{doc_id}` sentence {sentence_index}: {source}")]
    Sentence {
        doc_id: String,
        sentence_index: usize,
        #[source]
        source: Box<SelectError>,
    },
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("missing annotation: {0}")]
    Annotation(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Model(#[from] ModelIoError),
    #[error(transparent)]
    Adapter(#[from] AdapterError),
}

/// A finite sentence score, totally ordered.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectionScore(f64);

impl SelectionScore {
    pub const ZERO: SelectionScore = SelectionScore(0.0);

    pub fn new(value: f64) -> Result<Self, SelectError> {
        if value.is_finite() {
            Ok(SelectionScore(value))
        } else {
            Err(SelectError::NonFinite(value))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl Eq for SelectionScore {}

impl PartialOrd for SelectionScore {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for SelectionScore {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredSentence<'a> {
    pub doc_rank: usize,
    pub sentence_index: usize,
    pub score: SelectionScore,
    pub sentence: &'a AnnotatedSentence,
}

impl ScoredSentence<'_> {
    /// Selection order: score descending, then retrieval rank, then position.
    pub fn selection_order(&self, other: &Self) -> Ordering {
        other
            .score
            .cmp(&self.score)
            .then(self.doc_rank.cmp(&other.doc_rank))
            .then(self.sentence_index.cmp(&other.sentence_index))
    }
}

/// Per-question scoring state. Built once per bundle so that selectors can
/// cache question-level work (tf-idf statistics, question encodings,
/// evidence sets, adapter responses).
pub trait QuestionScorer {
    fn score(&self, doc: &Document, sentence_index: usize) -> Result<SelectionScore, SelectError>;
}

pub trait Selector: Send + Sync {
    fn name(&self) -> &str;

    fn prepare<'b>(&'b self, bundle: &'b RetrievalBundle) -> Result<Box<dyn QuestionScorer + 'b>, SelectError>;

    fn score(
        &self,
        bundle: &RetrievalBundle,
        doc: &Document,
        sentence_index: usize,
    ) -> Result<SelectionScore, SelectError> {
        self.prepare(bundle)?.score(doc, sentence_index)
    }
}

/// Scores every sentence of every retrieved document, in (rank, index) order.
pub fn score_all<'a>(
    selector: &dyn Selector,
    bundle: &'a RetrievalBundle,
) -> Result<Vec<ScoredSentence<'a>>, SelectError> {
    let scorer = selector.prepare(bundle)?;
    let mut out = Vec::with_capacity(bundle.sentence_count());
    for doc in &bundle.documents {
        for (i, sentence) in doc.sentences.iter().enumerate() {
            let score = scorer.score(doc, i).map_err(|e| SelectError::Sentence {
                doc_id: doc.doc_id.clone(),
                sentence_index: i,
                source: Box::new(e),
            })?;
            out.push(ScoredSentence {
                doc_rank: doc.rank,
                sentence_index: i,
                score,
                sentence,
            });
        }
    }
    Ok(out)
}

pub fn select_top_k<'a>(scored: &[ScoredSentence<'a>], k: usize) -> Result<Vec<ScoredSentence<'a>>, SelectError> {
    if k < 1 {
        return Err(SelectError::Argument("k must be at least 1".into()));
    }
    let mut ranked = scored.to_vec();
    ranked.sort_by(ScoredSentence::selection_order);
    ranked.truncate(k);
    Ok(ranked)
}

/// Gives every sentence the same score.
#[derive(Debug, Clone)]
pub struct ConstantSelector {
    pub value: f64,
}

impl Selector for ConstantSelector {
    fn name(&self) -> &str {
        "constant"
    }

    fn prepare<'b>(&'b self, _bundle: &'b RetrievalBundle) -> Result<Box<dyn QuestionScorer + 'b>, SelectError> {
        Ok(Box::new(*self))
    }
}

impl Copy for ConstantSelector {}

impl QuestionScorer for ConstantSelector {
    fn score(&self, _doc: &Document, _i: usize) -> Result<SelectionScore, SelectError> {
        SelectionScore::new(self.value)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Token;
    use proptest::prelude::*;

    fn sentence() -> AnnotatedSentence {
        AnnotatedSentence::new(vec![Token::new("x", "x", "NN", "O")], vec![])
    }

    fn bundle(shape: &[usize]) -> RetrievalBundle {
        RetrievalBundle {
            question_id: "q".into(),
            question: sentence(),
            documents: shape
                .iter()
                .enumerate()
                .map(|(d, &n)| Document {
                    doc_id: format!("d{d}"),
                    rank: d + 1,
                    sentences: (0..n).map(|_| sentence()).collect(),
                })
                .collect(),
            answers: vec![],
        }
    }

    #[test]
    fn score_all_counts_and_orders() {
        let b = bundle(&[2, 1, 4]);
        let scored = score_all(&ConstantSelector { value: 0.0 }, &b).unwrap();
        assert_eq!(scored.len(), 7);
        assert!(scored.iter().all(|s| s.score.value() == 0.0));
        let keys: Vec<_> = scored.iter().map(|s| (s.doc_rank, s.sentence_index)).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
        assert!(score_all(&ConstantSelector { value: 0.0 }, &bundle(&[]))
            .unwrap()
            .is_empty());
    }

    #[test]
    fn non_finite_scores_carry_sentence_context() {
        let b = bundle(&[1]);
        let err = score_all(&ConstantSelector { value: f64::NAN }, &b).unwrap_err();
        assert!(matches!(err, SelectError::Sentence { sentence_index: 0, .. }));
    }

    #[test]
    fn ties_broken_by_rank_then_index() {
        let s = sentence();
        let mk = |rank, idx, score| ScoredSentence {
            doc_rank: rank,
            sentence_index: idx,
            score: SelectionScore::new(score).unwrap(),
            sentence: &s,
        };
        let scored = vec![mk(1, 0, 3.0), mk(1, 1, 1.0), mk(2, 0, 3.0)];
        let top: Vec<_> = select_top_k(&scored, 2)
            .unwrap()
            .iter()
            .map(|s| (s.doc_rank, s.sentence_index))
            .collect();
        assert_eq!(top, vec![(1, 0), (2, 0)]);
        assert_eq!(select_top_k(&scored, 10).unwrap().len(), 3);
        assert!(matches!(select_top_k(&scored, 0), Err(SelectError::Argument(_))));
    }

    proptest! {
        #[test]
        fn top_k_is_permutation_invariant_and_nested(
            scores in proptest::collection::vec(0u8..4, 1..30),
            k in 1usize..35,
            rotate in 0usize..30,
        ) {
            let s = sentence();
            let scored: Vec<_> = scores
                .iter()
                .enumerate()
                .map(|(i, &v)| ScoredSentence {
                    doc_rank: i / 3 + 1,
                    sentence_index: i % 3,
                    score: SelectionScore::new(f64::from(v)).unwrap(),
                    sentence: &s,
                })
                .collect();
            let mut shuffled = scored.clone();
            shuffled.rotate_left(rotate % scored.len());
            shuffled.reverse();
            let a = select_top_k(&scored, k).unwrap();
            let b = select_top_k(&shuffled, k).unwrap();
            prop_assert_eq!(&a, &b);
            let bigger = select_top_k(&scored, k + 1).unwrap();
            prop_assert_eq!(&bigger[..a.len()], &a[..]);
            prop_assert_eq!(a.len(), k.min(scored.len()));
        }
    }
}
