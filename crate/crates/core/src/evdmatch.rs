//! Evidence matching and the answer-finding + evidence ensemble.
//!
//! Base constituents of the question, lemmatized and lowercased, form the
//! evidence set. A sentence earns one point per evidence item found as a
//! contiguous lemma run in it, plus one more if the item is also found in
//! the previous sentence of the same document.

use std::collections::HashSet;
use std::sync::Arc;

use crate::ansfind::{AnsFindModel, AnsFindScorer};
use crate::corpus::{previous_sentence, AnnotatedSentence, ConstituentSpan, Document, RetrievalBundle};
use crate::embedding::EmbeddingTable;
use crate::selector::{QuestionScorer, SelectError, SelectionScore, Selector};

pub const WH_WORDS: [&str; 9] = ["who", "what", "when", "where", "why", "which", "how", "whom", "whose"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Evidence {
    pub lemmas: Vec<String>,
    pub source: ConstituentSpan,
}

fn is_punctuation(text: &str) -> bool {
    !text.chars().any(char::is_alphanumeric)
}

/// One item per distinct base constituent, skipping constituents made only
/// of punctuation or of a single wh-word.
pub fn evidence_set(question: &AnnotatedSentence) -> Vec<Evidence> {
    let mut seen: HashSet<Vec<String>> = HashSet::new();
    let mut out = Vec::new();
    for c in question.constituents.iter().filter(|c| c.is_base) {
        let tokens = &question.tokens[c.start..c.end];
        if tokens.iter().all(|t| is_punctuation(&t.text)) {
            continue;
        }
        let lemmas: Vec<String> = tokens.iter().map(|t| t.lemma.to_lowercase()).collect();
        if lemmas.len() == 1 && WH_WORDS.contains(&lemmas[0].as_str()) {
            continue;
        }
        if seen.insert(lemmas.clone()) {
            out.push(Evidence {
                lemmas,
                source: c.clone(),
            });
        }
    }
    out
}

/// 1 when the evidence lemmas occur contiguously in the sentence lemmas,
/// ignoring case.
pub fn match_evidence(u: &Evidence, sentence: &AnnotatedSentence) -> u32 {
    let n = u.lemmas.len();
    if n == 0 || n > sentence.tokens.len() {
        return 0;
    }
    let hit = sentence.tokens.windows(n).any(|w| {
        w.iter()
            .zip(&u.lemmas)
            .all(|(t, l)| t.lemma.chars().flat_map(char::to_lowercase).eq(l.chars()))
    });
    u32::from(hit)
}

fn evd_count(evidence: &[Evidence], doc: &Document, sentence_index: usize) -> Result<u32, SelectError> {
    let prev = previous_sentence(doc, sentence_index)?;
    let current = &doc.sentences[sentence_index];
    Ok(evidence
        .iter()
        .map(|u| match_evidence(u, current) + prev.map_or(0, |p| match_evidence(u, p)))
        .sum())
}

/// Evidence score of one sentence, counting matches in it and its predecessor.
pub fn s_evd(bundle: &RetrievalBundle, doc: &Document, sentence_index: usize) -> Result<SelectionScore, SelectError> {
    let evidence = evidence_set(&bundle.question);
    SelectionScore::new(f64::from(evd_count(&evidence, doc, sentence_index)?))
}

#[derive(Debug, Clone, Default)]
pub struct EvdMatchSelector;

struct PreparedEvd {
    evidence: Vec<Evidence>,
}

impl QuestionScorer for PreparedEvd {
    fn score(&self, doc: &Document, sentence_index: usize) -> Result<SelectionScore, SelectError> {
        SelectionScore::new(f64::from(evd_count(&self.evidence, doc, sentence_index)?))
    }
}

impl Selector for EvdMatchSelector {
    fn name(&self) -> &str {
        "evdmatch-only"
    }

    fn prepare<'b>(&'b self, bundle: &'b RetrievalBundle) -> Result<Box<dyn QuestionScorer + 'b>, SelectError> {
        Ok(Box::new(PreparedEvd {
            evidence: evidence_set(&bundle.question),
        }))
    }
}

/// `s_ans + s_evd`
pub fn ensemble_score(
    bundle: &RetrievalBundle,
    doc: &Document,
    sentence_index: usize,
    model: &AnsFindModel,
    table: &EmbeddingTable,
) -> Result<SelectionScore, SelectError> {
    let ans = crate::ansfind::s_ans(bundle, doc, sentence_index, model, table)?;
    let evd = s_evd(bundle, doc, sentence_index)?;
    SelectionScore::new(ans.value() + evd.value())
}

#[derive(Debug, Clone)]
pub struct EnsembleSelector {
    model: Arc<AnsFindModel>,
    table: Arc<EmbeddingTable>,
}

impl EnsembleSelector {
    pub fn new(model: Arc<AnsFindModel>, table: Arc<EmbeddingTable>) -> Result<Self, SelectError> {
        if model.dim != table.dim() {
            return Err(SelectError::Argument(format!(
                "model dim {} does not match embedding dim {}",
                model.dim,
                table.dim()
            )));
        }
        Ok(EnsembleSelector { model, table })
    }
}

struct PreparedEnsemble<'b> {
    ans: AnsFindScorer<'b>,
    evd: PreparedEvd,
}

impl QuestionScorer for PreparedEnsemble<'_> {
    fn score(&self, doc: &Document, sentence_index: usize) -> Result<SelectionScore, SelectError> {
        let evd = self.evd.score(doc, sentence_index)?;
        let ans = self.ans.score(doc, sentence_index)?;
        SelectionScore::new(ans.value() + evd.value())
    }
}

impl Selector for EnsembleSelector {
    fn name(&self) -> &str {
        "ensemble"
    }

    fn prepare<'b>(&'b self, bundle: &'b RetrievalBundle) -> Result<Box<dyn QuestionScorer + 'b>, SelectError> {
        Ok(Box::new(PreparedEnsemble {
            ans: AnsFindScorer::new(&self.model, &self.table, &bundle.question)?,
            evd: PreparedEvd {
                evidence: evidence_set(&bundle.question),
            },
        }))
    }
}
