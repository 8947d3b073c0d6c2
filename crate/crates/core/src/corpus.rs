//! Questions, retrieved documents and their offline annotations.
//!
//! Everything here is produced upstream (tokenization, tagging, parsing)
//! and read from line-delimited JSON. Types are immutable after loading.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("io error reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: malformed record: {source}")]
    Parse {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("line {line}: invalid field `{field}`: {message}")]
    Schema {
        line: usize,
        field: String,
        message: String,
    },
    #[error("sentence index {index} out of bounds for document `{doc_id}` with {len} sentences")]
    Bounds { doc_id: String, index: usize, len: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub text: String,
    /// Lowercased lemma. Falls back to the lowercased surface form.
    #[serde(default)]
    pub lemma: String,
    #[serde(default)]
    pub pos: String,
    #[serde(default = "outside_tag")]
    pub ner: String,
}

fn outside_tag() -> String {
    "O".to_string()
}

impl Token {
    /// Convenience constructor used by tests and the synthetic generator.
    pub fn new(text: &str, lemma: &str, pos: &str, ner: &str) -> Self {
        Token {
            text: text.to_string(),
            lemma: lemma.to_string(),
            pos: pos.to_string(),
            ner: ner.to_string(),
        }
    }

    pub fn is_entity(&self) -> bool {
        self.ner != "O" && !self.ner.is_empty()
    }

    fn normalize(&mut self) {
        if self.lemma.is_empty() {
            self.lemma = self.text.to_lowercase();
        } else {
            self.lemma = self.lemma.to_lowercase();
        }
        if self.ner.is_empty() {
            self.ner = outside_tag();
        }
    }
}

/// A parse constituent over a half-open token range.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstituentSpan {
    pub start: usize,
    pub end: usize,
    pub label: String,
    /// True when every child of the constituent is a POS tag.
    pub is_base: bool,
}

impl ConstituentSpan {
    pub fn new(start: usize, end: usize, label: &str, is_base: bool) -> Self {
        ConstituentSpan {
            start,
            end,
            label: label.to_string(),
            is_base,
        }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AnnotatedSentence {
    pub doc_id: String,
    pub sentence_index: usize,
    pub tokens: Vec<Token>,
    pub constituents: Vec<ConstituentSpan>,
}

impl AnnotatedSentence {
    pub fn new(tokens: Vec<Token>, constituents: Vec<ConstituentSpan>) -> Self {
        AnnotatedSentence {
            doc_id: String::new(),
            sentence_index: 0,
            tokens,
            constituents,
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn texts(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(|t| t.text.as_str())
    }

    pub fn lemmas(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(|t| t.lemma.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub doc_id: String,
    /// Retrieval rank, 1-based.
    pub rank: usize,
    pub sentences: Vec<AnnotatedSentence>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RetrievalBundle {
    pub question_id: String,
    pub question: AnnotatedSentence,
    /// Sorted by ascending rank.
    pub documents: Vec<Document>,
    pub answers: Vec<String>,
}

impl RetrievalBundle {
    pub fn sentence_count(&self) -> usize {
        self.documents.iter().map(|d| d.sentences.len()).sum()
    }

    pub fn sentences(&self) -> impl Iterator<Item = (&Document, &AnnotatedSentence)> {
        self.documents
            .iter()
            .flat_map(|d| d.sentences.iter().map(move |s| (d, s)))
    }

    /// Keeps only the `k` best-ranked documents.
    pub fn truncated(&self, k: usize) -> RetrievalBundle {
        RetrievalBundle {
            question_id: self.question_id.clone(),
            question: self.question.clone(),
            documents: self.documents.iter().take(k).cloned().collect(),
            answers: self.answers.clone(),
        }
    }
}

/// Sentence `i - 1` of the same document, or `None` for the first sentence.
pub fn previous_sentence(doc: &Document, i: usize) -> Result<Option<&AnnotatedSentence>, CorpusError> {
    if i >= doc.sentences.len() {
        return Err(CorpusError::Bounds {
            doc_id: doc.doc_id.clone(),
            index: i,
            len: doc.sentences.len(),
        });
    }
    Ok(if i == 0 { None } else { Some(&doc.sentences[i - 1]) })
}

// Wire format. Sentence-level doc_id and index are implied by position.

#[derive(Debug, Serialize, Deserialize)]
struct SentenceRecord {
    tokens: Vec<Token>,
    #[serde(default)]
    constituents: Vec<ConstituentSpan>,
}

#[derive(Debug, Serialize, Deserialize)]
struct DocumentRecord {
    doc_id: String,
    rank: usize,
    sentences: Vec<SentenceRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
struct BundleRecord {
    question_id: String,
    question: SentenceRecord,
    documents: Vec<DocumentRecord>,
    #[serde(default)]
    answers: Vec<String>,
}

fn schema(line: usize, field: impl Into<String>, message: impl Into<String>) -> CorpusError {
    CorpusError::Schema {
        line,
        field: field.into(),
        message: message.into(),
    }
}

fn convert_sentence(
    record: SentenceRecord,
    doc_id: &str,
    sentence_index: usize,
    line: usize,
    field: &str,
) -> Result<AnnotatedSentence, CorpusError> {
    let mut tokens = record.tokens;
    for (i, token) in tokens.iter_mut().enumerate() {
        if token.text.is_empty() {
            return Err(schema(line, format!("{field}.tokens[{i}].text"), "empty token text"));
        }
        token.normalize();
    }
    let len = tokens.len();
    for (i, c) in record.constituents.iter().enumerate() {
        if c.start >= c.end || c.end > len {
            return Err(schema(
                line,
                format!("{field}.constituents[{i}]"),
                format!("span [{}, {}) invalid for {} tokens", c.start, c.end, len),
            ));
        }
    }
    Ok(AnnotatedSentence {
        doc_id: doc_id.to_string(),
        sentence_index,
        tokens,
        constituents: record.constituents,
    })
}

/// Parses and validates one dataset record. `line` is 1-based and only
/// used for error messages.
pub fn parse_bundle(text: &str, line: usize) -> Result<RetrievalBundle, CorpusError> {
    let record: BundleRecord = serde_json::from_str(text).map_err(|source| CorpusError::Parse { line, source })?;
    if record.question_id.is_empty() {
        return Err(schema(line, "question_id", "empty"));
    }
    let question = convert_sentence(record.question, "", 0, line, "question")?;
    if question.tokens.is_empty() {
        return Err(schema(line, "question.tokens", "question has no tokens"));
    }
    let mut documents = Vec::with_capacity(record.documents.len());
    for (di, doc) in record.documents.into_iter().enumerate() {
        if doc.rank < 1 {
            return Err(schema(line, format!("documents[{di}].rank"), "rank must be >= 1"));
        }
        let mut sentences = Vec::with_capacity(doc.sentences.len());
        for (si, s) in doc.sentences.into_iter().enumerate() {
            let field = format!("documents[{di}].sentences[{si}]");
            sentences.push(convert_sentence(s, &doc.doc_id, si, line, &field)?);
        }
        documents.push(Document {
            doc_id: doc.doc_id,
            rank: doc.rank,
            sentences,
        });
    }
    documents.sort_by_key(|d| d.rank);
    if let Some(w) = documents.windows(2).find(|w| w[0].rank == w[1].rank) {
        return Err(schema(line, "documents.rank", format!("duplicate rank {}", w[0].rank)));
    }
    Ok(RetrievalBundle {
        question_id: record.question_id,
        question,
        documents,
        answers: record.answers,
    })
}

pub fn read_dataset<R: BufRead>(reader: R) -> Result<Vec<RetrievalBundle>, CorpusError> {
    let mut bundles = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| CorpusError::Io {
            path: "<reader>".into(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        bundles.push(parse_bundle(&line, i + 1)?);
    }
    Ok(bundles)
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Vec<RetrievalBundle>, CorpusError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_dataset(BufReader::new(file))
}

fn sentence_record(s: &AnnotatedSentence) -> SentenceRecord {
    SentenceRecord {
        tokens: s.tokens.clone(),
        constituents: s.constituents.clone(),
    }
}

/// One JSON line (without trailing newline) in the dataset schema.
pub fn bundle_to_json(bundle: &RetrievalBundle) -> String {
    let record = BundleRecord {
        question_id: bundle.question_id.clone(),
        question: sentence_record(&bundle.question),
        documents: bundle
            .documents
            .iter()
            .map(|d| DocumentRecord {
                doc_id: d.doc_id.clone(),
                rank: d.rank,
                sentences: d.sentences.iter().map(sentence_record).collect(),
            })
            .collect(),
        answers: bundle.answers.clone(),
    };
    serde_json::to_string(&record).expect("bundle records always serialize")
}

pub fn write_dataset<W: Write>(mut out: W, bundles: &[RetrievalBundle]) -> std::io::Result<()> {
    for b in bundles {
        writeln!(out, "{}", bundle_to_json(b))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const ONE: &str = r#"{"question_id":"q1","question":{"tokens":[{"text":"Who","lemma":"who","pos":"WP","ner":"O"},{"text":"wrote","lemma":"write","pos":"VBD","ner":"O"},{"text":"Hamlet","lemma":"hamlet","pos":"NNP","ner":"WORK_OF_ART"}],"constituents":[{"start":0,"end":1,"label":"WHNP","is_base":true},{"start":2,"end":3,"label":"NP","is_base":true}]},"documents":[{"doc_id":"b","rank":2,"sentences":[{"tokens":[{"text":"Hi","pos":"UH"}],"constituents":[]}]},{"doc_id":"a","rank":1,"sentences":[{"tokens":[{"text":"Hamlet","lemma":"hamlet","pos":"NNP","ner":"WORK_OF_ART"},{"text":"is","lemma":"be","pos":"VBZ","ner":"O"}],"constituents":[{"start":0,"end":1,"label":"NP","is_base":true}]}]}],"answers":["Shakespeare"]}"#;

    #[test]
    fn empty_input_gives_no_bundles() {
        assert!(read_dataset("".as_bytes()).unwrap().is_empty());
    }

    #[test]
    fn documents_sorted_by_rank_and_indices_assigned() {
        let b = read_dataset(ONE.as_bytes()).unwrap().remove(0);
        assert_eq!(b.documents[0].rank, 1);
        assert_eq!(b.documents[1].doc_id, "b");
        let s = &b.documents[1].sentences[0];
        assert_eq!(s.doc_id, "b");
        assert_eq!(s.sentence_index, 0);
        // lemma and ner defaults
        assert_eq!(s.tokens[0].lemma, "hi");
        assert_eq!(s.tokens[0].ner, "O");
    }

    #[test]
    fn span_past_end_is_schema_error() {
        let bad = ONE.replace(
            r#"{"start":2,"end":3,"label":"NP""#,
            r#"{"start":2,"end":4,"label":"NP""#,
        );
        match read_dataset(bad.as_bytes()) {
            Err(CorpusError::Schema { line, field, .. }) => {
                assert_eq!(line, 1);
                assert!(field.contains("question.constituents"), "{field}");
            }
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let text = format!("{ONE}\n{{not json\n");
        match read_dataset(text.as_bytes()) {
            Err(CorpusError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_ranks_rejected() {
        let bad = ONE.replace(r#""rank":2"#, r#""rank":1"#);
        assert!(matches!(read_dataset(bad.as_bytes()), Err(CorpusError::Schema { .. })));
    }

    #[test]
    fn previous_sentence_rules() {
        let mk = |i: usize| AnnotatedSentence {
            doc_id: "d".into(),
            sentence_index: i,
            tokens: vec![Token::new("x", "x", "NN", "O")],
            constituents: vec![],
        };
        let doc = Document {
            doc_id: "d".into(),
            rank: 1,
            sentences: (0..5).map(mk).collect(),
        };
        assert!(previous_sentence(&doc, 0).unwrap().is_none());
        assert_eq!(previous_sentence(&doc, 3).unwrap().unwrap().sentence_index, 2);
        assert!(matches!(previous_sentence(&doc, 5), Err(CorpusError::Bounds { .. })));
    }

    #[test]
    fn serialize_round_trip() {
        let bundles = read_dataset(ONE.as_bytes()).unwrap();
        let mut buf = Vec::new();
        write_dataset(&mut buf, &bundles).unwrap();
        let again = read_dataset(buf.as_slice()).unwrap();
        assert_eq!(bundles, again);
    }
}
