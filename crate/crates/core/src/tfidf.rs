//! tf-idf cosine selector.
//!
//! Statistics are collected per question over its own retrieved sentences.
//! Weights use a log-scaled term frequency and a smoothed idf:
//! `(1 + ln tf) * (ln((1 + N) / (1 + df)) + 1)`.

use std::collections::{BTreeMap, HashMap, HashSet};

use crate::corpus::{Document, RetrievalBundle, Token};
use crate::selector::{QuestionScorer, SelectError, SelectionScore, Selector};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TfIdfStats {
    pub n_sentences: usize,
    pub df: HashMap<String, usize>,
}

impl TfIdfStats {
    pub fn idf(&self, term: &str) -> f64 {
        let df = self.df.get(term).copied().unwrap_or(0);
        ((1.0 + self.n_sentences as f64) / (1.0 + df as f64)).ln() + 1.0
    }
}

/// Term weights sorted by term; zero weights are never stored.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseVector {
    entries: Vec<(String, f64)>,
}

impl SparseVector {
    pub fn from_pairs<I: IntoIterator<Item = (String, f64)>>(pairs: I) -> Self {
        let map: BTreeMap<String, f64> = pairs.into_iter().filter(|(_, w)| *w != 0.0).collect();
        SparseVector {
            entries: map.into_iter().collect(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, term: &str) -> Option<f64> {
        self.entries
            .binary_search_by(|(t, _)| t.as_str().cmp(term))
            .ok()
            .map(|i| self.entries[i].1)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.entries.iter().map(|(t, w)| (t.as_str(), *w))
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|(_, w)| w * w).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, factor: f64) -> SparseVector {
        SparseVector::from_pairs(self.entries.iter().map(|(t, w)| (t.clone(), w * factor)))
    }

    pub fn dot(&self, other: &SparseVector) -> f64 {
        let (mut i, mut j, mut acc) = (0, 0, 0.0);
        while i < self.entries.len() && j < other.entries.len() {
            match self.entries[i].0.cmp(&other.entries[j].0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    acc += self.entries[i].1 * other.entries[j].1;
                    i += 1;
                    j += 1;
                }
            }
        }
        acc
    }
}

fn term(token: &Token) -> String {
    token.text.to_lowercase()
}

pub fn build_stats(bundle: &RetrievalBundle) -> TfIdfStats {
    let mut stats = TfIdfStats::default();
    for (_, sentence) in bundle.sentences() {
        stats.n_sentences += 1;
        let terms: HashSet<String> = sentence.tokens.iter().map(term).collect();
        for t in terms {
            *stats.df.entry(t).or_insert(0) += 1;
        }
    }
    stats
}

pub fn vectorize(tokens: &[Token], stats: &TfIdfStats) -> SparseVector {
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for t in tokens {
        *counts.entry(term(t)).or_insert(0) += 1;
    }
    SparseVector::from_pairs(counts.into_iter().map(|(t, c)| {
        let w = (1.0 + (c as f64).ln()) * stats.idf(&t);
        (t, w)
    }))
}

/// Cosine similarity, 0 when either side is empty.
pub fn cosine(u: &SparseVector, v: &SparseVector) -> f64 {
    if u.is_empty() || v.is_empty() {
        return 0.0;
    }
    let c = u.dot(v) / (u.norm() * v.norm());
    c.clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Default)]
pub struct TfIdfSelector;

struct PreparedTfIdf {
    stats: TfIdfStats,
    question: SparseVector,
}

impl QuestionScorer for PreparedTfIdf {
    fn score(&self, doc: &Document, sentence_index: usize) -> Result<SelectionScore, SelectError> {
        let sentence = doc
            .sentences
            .get(sentence_index)
            .ok_or_else(|| SelectError::Argument(format!("sentence {sentence_index} out of range")))?;
        let v = vectorize(&sentence.tokens, &self.stats);
        SelectionScore::new(cosine(&self.question, &v))
    }
}

impl Selector for TfIdfSelector {
    fn name(&self) -> &str {
        "tfidf"
    }

    fn prepare<'b>(&'b self, bundle: &'b RetrievalBundle) -> Result<Box<dyn QuestionScorer + 'b>, SelectError> {
        let stats = build_stats(bundle);
        let question = vectorize(&bundle.question.tokens, &stats);
        Ok(Box::new(PreparedTfIdf { stats, question }))
    }
}
