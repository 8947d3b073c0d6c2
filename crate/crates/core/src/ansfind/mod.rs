//! Answer-finding selector.
//!
//! Every parse constituent of a sentence is a candidate answer. A candidate
//! is represented by the mean embedding of its tokens, the means of up to
//! four tokens on either side, and the embeddings of its first and last
//! tokens. The question is reduced to its prefix before the first named
//! entity and run through a GRU. A sentence scores 1 when any candidate's
//! plausibility exceeds the threshold, else 0.

mod model;
mod train;

use std::collections::HashSet;
use std::sync::Arc;

pub use model::{AnsFindModel, DEFAULT_THRESHOLD, MODEL_KIND};
pub use train::{
    build_training_instances, featurize, heldout_accuracy, prepare_ansfind_data, train_ansfind, train_ansfind_bundles,
    AnsFindData, AnsFindInstance, AnsFindTrainConfig, LabeledCandidate, NEGATIVES_PER_POSITIVE, POSITIVE_WEIGHT,
};

use crate::corpus::{AnnotatedSentence, Document, RetrievalBundle, Token};
use crate::embedding::EmbeddingTable;
use crate::nn::{mean_of, sigmoid};
use crate::selector::{QuestionScorer, SelectError, SelectionScore, Selector};

/// Context tokens averaged on each side of a candidate.
pub const CONTEXT_WINDOW: usize = 4;
/// Prefix length used when the question has no usable entity cut.
pub const FALLBACK_PREFIX_LEN: usize = 6;

/// Half-open token range `[start, end)` of a constituent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Candidate {
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpanRep(pub Vec<f64>);

#[derive(Debug, Clone, PartialEq)]
pub struct QuestionPrefixEncoding(pub Vec<f64>);

/// All constituents, deduplicated on their span, in annotation order.
pub fn extract_candidates(sentence: &AnnotatedSentence) -> Vec<Candidate> {
    let mut seen = HashSet::new();
    sentence
        .constituents
        .iter()
        .map(|c| Candidate {
            start: c.start,
            end: c.end,
        })
        .filter(|c| seen.insert(*c))
        .collect()
}

/// Tokens before the first named entity; falls back to the first six
/// tokens when there is no entity or the entity opens the question.
pub fn question_prefix(question: &AnnotatedSentence) -> &[Token] {
    let cut = question.tokens.iter().position(Token::is_entity);
    match cut {
        Some(i) if i > 0 => &question.tokens[..i],
        _ => &question.tokens[..question.tokens.len().min(FALLBACK_PREFIX_LEN)],
    }
}

pub fn embed_tokens(tokens: &[Token], table: &EmbeddingTable) -> Vec<Vec<f64>> {
    tokens.iter().map(|t| table.embed(t)).collect()
}

/// `[mean(E[b..e]); mean(E[b-4..b]); mean(E[e..e+4])]`, empty windows
/// contributing zeros.
pub fn span_features(embeddings: &[Vec<f64>], cand: Candidate, dim: usize) -> Vec<f64> {
    let len = embeddings.len();
    let left = cand.start.saturating_sub(CONTEXT_WINDOW);
    let right = (cand.end + CONTEXT_WINDOW).min(len);
    let avg = |range: std::ops::Range<usize>| mean_of(embeddings[range].iter().map(Vec::as_slice), dim);
    let mut f = avg(cand.start..cand.end);
    f.extend(avg(left..cand.start));
    f.extend(avg(cand.end..right));
    f
}

pub fn span_representation(
    sentence: &AnnotatedSentence,
    cand: Candidate,
    table: &EmbeddingTable,
    model: &AnsFindModel,
) -> SpanRep {
    let e = embed_tokens(&sentence.tokens, table);
    SpanRep(model.project_span(&span_features(&e, cand, table.dim())))
}

pub fn encode_question(
    prefix: &[Token],
    model: &AnsFindModel,
    table: &EmbeddingTable,
) -> Result<QuestionPrefixEncoding, SelectError> {
    if prefix.is_empty() {
        return Err(SelectError::Argument("empty question prefix".into()));
    }
    Ok(QuestionPrefixEncoding(model.encode(&embed_tokens(prefix, table))))
}

/// `sigmoid(v . FFNN([h_q; h_i; h_i * h_q; E_b; E_e]))`
pub fn plausibility(
    h_q: &QuestionPrefixEncoding,
    h_i: &SpanRep,
    e_b: &[f64],
    e_e: &[f64],
    model: &AnsFindModel,
) -> Result<f64, SelectError> {
    let d = model.dim;
    if h_q.0.len() != d || h_i.0.len() != d || e_b.len() != d || e_e.len() != d {
        return Err(SelectError::Argument(format!("all inputs must have length {d}")));
    }
    Ok(sigmoid(model.score_trace(&h_q.0, &h_i.0, e_b, e_e).logit))
}

/// Strict-threshold existential over candidate probabilities.
pub fn binary_answer_score<I: IntoIterator<Item = f64>>(probabilities: I, threshold: f64) -> f64 {
    if probabilities.into_iter().any(|p| p > threshold) {
        1.0
    } else {
        0.0
    }
}

/// Scores sentences for one prepared question.
pub(crate) struct AnsFindScorer<'b> {
    model: &'b AnsFindModel,
    table: &'b EmbeddingTable,
    h_q: QuestionPrefixEncoding,
}

impl<'b> AnsFindScorer<'b> {
    pub(crate) fn new(
        model: &'b AnsFindModel,
        table: &'b EmbeddingTable,
        question: &AnnotatedSentence,
    ) -> Result<Self, SelectError> {
        let h_q = encode_question(question_prefix(question), model, table)?;
        Ok(AnsFindScorer { model, table, h_q })
    }

    pub(crate) fn sentence_score(&self, sentence: &AnnotatedSentence) -> f64 {
        let candidates = extract_candidates(sentence);
        if candidates.is_empty() {
            return 0.0;
        }
        let e = embed_tokens(&sentence.tokens, self.table);
        let d = self.model.dim;
        let probs = candidates.into_iter().map(|c| {
            let h_i = self.model.project_span(&span_features(&e, c, d));
            sigmoid(
                self.model
                    .score_trace(&self.h_q.0, &h_i, &e[c.start], &e[c.end - 1])
                    .logit,
            )
        });
        binary_answer_score(probs, self.model.threshold)
    }
}

impl QuestionScorer for AnsFindScorer<'_> {
    fn score(&self, doc: &Document, sentence_index: usize) -> Result<SelectionScore, SelectError> {
        let sentence = doc
            .sentences
            .get(sentence_index)
            .ok_or_else(|| SelectError::Argument(format!("sentence {sentence_index} out of range")))?;
        SelectionScore::new(self.sentence_score(sentence))
    }
}

/// `s_ans` on its own.
#[derive(Debug, Clone)]
pub struct AnsFindSelector {
    model: Arc<AnsFindModel>,
    table: Arc<EmbeddingTable>,
}

impl AnsFindSelector {
    pub fn new(model: Arc<AnsFindModel>, table: Arc<EmbeddingTable>) -> Result<Self, SelectError> {
        if model.dim != table.dim() {
            return Err(SelectError::Argument(format!(
                "model dim {} does not match embedding dim {}",
                model.dim,
                table.dim()
            )));
        }
        Ok(AnsFindSelector { model, table })
    }

    pub fn model(&self) -> &AnsFindModel {
        &self.model
    }

    pub fn table(&self) -> &EmbeddingTable {
        &self.table
    }
}

/// `s_ans(q, x)` for one sentence.
pub fn s_ans(
    bundle: &RetrievalBundle,
    doc: &Document,
    sentence_index: usize,
    model: &AnsFindModel,
    table: &EmbeddingTable,
) -> Result<SelectionScore, SelectError> {
    AnsFindScorer::new(model, table, &bundle.question)?.score(doc, sentence_index)
}

impl Selector for AnsFindSelector {
    fn name(&self) -> &str {
        "ansfind-only"
    }

    fn prepare<'b>(&'b self, bundle: &'b RetrievalBundle) -> Result<Box<dyn QuestionScorer + 'b>, SelectError> {
        Ok(Box::new(AnsFindScorer::new(
            &self.model,
            &self.table,
            &bundle.question,
        )?))
    }
}

/// Lowercased token set with punctuation-only tokens removed.
fn token_set<'a, I: IntoIterator<Item = &'a str>>(words: I) -> HashSet<String> {
    words
        .into_iter()
        .map(str::to_lowercase)
        .map(|w| w.trim_matches(|c: char| c.is_ascii_punctuation()).to_string())
        .filter(|w| !w.is_empty())
        .collect()
}

pub fn jaccard(a: &HashSet<String>, b: &HashSet<String>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return 0.0;
    }
    a.intersection(b).count() as f64 / union as f64
}

pub(crate) fn candidate_set(sentence: &AnnotatedSentence, cand: Candidate) -> HashSet<String> {
    token_set(sentence.tokens[cand.start..cand.end].iter().map(|t| t.text.as_str()))
}

pub(crate) fn answer_set(answer: &str) -> HashSet<String> {
    token_set(answer.split_whitespace())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::ConstituentSpan;
    use crate::nn::Tensor;

    fn tok(w: &str, ner: &str) -> Token {
        Token::new(w, &w.to_lowercase(), "NN", ner)
    }

    fn sentence(words: &[&str], spans: &[(usize, usize)]) -> AnnotatedSentence {
        AnnotatedSentence::new(
            words.iter().map(|w| tok(w, "O")).collect(),
            spans
                .iter()
                .map(|&(s, e)| ConstituentSpan::new(s, e, "NP", false))
                .collect(),
        )
    }

    fn set(words: &[&str]) -> HashSet<String> {
        words.iter().map(|w| w.to_string()).collect()
    }

    #[test]
    fn candidates_dedup() {
        let s = sentence(&["a", "b", "c"], &[(0, 2), (2, 3), (0, 3), (0, 2)]);
        assert_eq!(extract_candidates(&s).len(), 3);
        assert!(extract_candidates(&sentence(&["a"], &[])).is_empty());
    }

    #[test]
    fn prefix_cuts_at_first_entity() {
        let q = AnnotatedSentence::new(
            vec![tok("who", "O"), tok("wrote", "O"), tok("Hamlet", "WORK_OF_ART")],
            vec![],
        );
        let p: Vec<_> = question_prefix(&q).iter().map(|t| t.text.as_str()).collect();
        assert_eq!(p, vec!["who", "wrote"]);

        let words: Vec<Token> = (0..10).map(|i| tok(&format!("w{i}"), "O")).collect();
        let q = AnnotatedSentence::new(words, vec![]);
        assert_eq!(question_prefix(&q).len(), 6);

        let q = AnnotatedSentence::new(vec![tok("Paris", "GPE"), tok("is", "O"), tok("where", "O")], vec![]);
        assert_eq!(question_prefix(&q).len(), 3);
    }

    #[test]
    fn span_features_windows() {
        let e: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64]).collect();
        // candidate (1, 3): inside mean(1, 2), left mean(0), right mean(3, 4)
        assert_eq!(
            span_features(&e, Candidate { start: 1, end: 3 }, 1),
            vec![1.5, 0.0, 3.5]
        );
        // whole sentence: both context windows empty
        assert_eq!(
            span_features(&e, Candidate { start: 0, end: 5 }, 1),
            vec![2.0, 0.0, 0.0]
        );
        let e: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        // left window is capped at four tokens: 1..=4
        assert_eq!(
            span_features(&e, Candidate { start: 5, end: 6 }, 1),
            vec![5.0, 2.5, 7.5]
        );
    }

    #[test]
    fn span_representation_matches_hand_projection() {
        let mut table = EmbeddingTable::new(2, 8);
        for (w, v) in [
            ("a", [1.0, 0.0]),
            ("b", [0.0, 1.0]),
            ("c", [2.0, 2.0]),
            ("d", [-1.0, 3.0]),
            ("e", [4.0, -2.0]),
        ] {
            table.insert(w, v.to_vec());
        }
        let s = sentence(&["a", "b", "c", "d", "e"], &[(1, 3)]);
        let mut m = AnsFindModel::zeros(2, 1);
        // projection picks inside[0] + left[1], right[0] - right[1]
        m.proj_w = Tensor::from_vec(2, 6, vec![1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, -1.0]);
        m.proj_b = Tensor::from_vec(2, 1, vec![0.5, 0.0]);
        // inside = (1, 1.5), left = (1, 0), right = (1.5, 0.5)
        let h = span_representation(&s, Candidate { start: 1, end: 3 }, &table, &m);
        assert_eq!(h.0, vec![1.0 + 0.0 + 0.5, 1.5 - 0.5]);
    }

    #[test]
    fn zero_output_vector_gives_half() {
        let m = AnsFindModel::init(3, 4, 0.05, 1);
        let mut m0 = m.clone();
        m0.out.fill_zero();
        let v = vec![0.1; 3];
        let p = plausibility(&QuestionPrefixEncoding(v.clone()), &SpanRep(v.clone()), &v, &v, &m0).unwrap();
        assert_eq!(p, 0.5);
        let p = plausibility(&QuestionPrefixEncoding(v.clone()), &SpanRep(v.clone()), &v, &v, &m).unwrap();
        assert!(p > 0.0 && p < 1.0);
        assert!(plausibility(&QuestionPrefixEncoding(vec![0.0]), &SpanRep(v.clone()), &v, &v, &m).is_err());
    }

    #[test]
    fn plausibility_matches_hand_forward_pass() {
        // dim 1, hidden 1; x = [hq, hi, hi*hq, eb, ee] = [2, 3, 6, 1, -1]
        let mut m = AnsFindModel::zeros(1, 1);
        m.ff1_w = Tensor::from_vec(1, 5, vec![0.1, 0.2, -0.05, 1.0, 0.5]);
        m.ff1_b = Tensor::from_vec(1, 1, vec![0.1]);
        m.ff2_w = Tensor::from_vec(1, 1, vec![2.0]);
        m.ff2_b = Tensor::from_vec(1, 1, vec![-0.3]);
        m.out = Tensor::from_vec(1, 1, vec![1.5]);
        // pre1 = 0.2 + 0.6 - 0.3 + 1 - 0.5 + 0.1 = 1.1; h2 = 2.2 - 0.3 = 1.9; logit = 2.85
        let p = plausibility(
            &QuestionPrefixEncoding(vec![2.0]),
            &SpanRep(vec![3.0]),
            &[1.0],
            &[-1.0],
            &m,
        )
        .unwrap();
        assert!((p - sigmoid(2.85)).abs() < 1e-12);
    }

    #[test]
    fn threshold_is_strict() {
        assert_eq!(binary_answer_score([0.31], 0.3), 1.0);
        assert_eq!(binary_answer_score([0.1, 0.29], 0.3), 0.0);
        assert_eq!(binary_answer_score([0.3], 0.3), 0.0);
        assert_eq!(binary_answer_score([], 0.3), 0.0);
    }

    #[test]
    fn jaccard_cases() {
        assert_eq!(jaccard(&set(&["a", "b"]), &set(&["a", "b"])), 1.0);
        assert_eq!(jaccard(&set(&["a"]), &set(&["b"])), 0.0);
        assert!((jaccard(&set(&["new", "york"]), &set(&["york", "city"])) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(jaccard(&set(&[]), &set(&[])), 0.0);
        assert_eq!(answer_set("The  Silent, River"), set(&["the", "silent", "river"]));
    }
}
