//! Coarse-to-fine pipeline: score, keep the top k sentences, concatenate,
//! optionally read; plus recall/EM/F1 evaluation and throughput benchmarks.

use std::borrow::Cow;
use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adapter::{ReaderAdapter, ReaderAnswer};
use crate::corpus::{AnnotatedSentence, RetrievalBundle};
use crate::metrics::{contains_answer, exact_match, f1_score, AnswerMatcher};
use crate::selector::{score_all, select_top_k, SelectError, Selector};

pub const DEFAULT_K_SENTENCES: usize = 10;
pub const DEFAULT_K_DOCUMENTS: usize = 50;
pub const DEFAULT_BENCH_SAMPLE: usize = 100;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("alignment error: {0}")]
    Alignment(String),
    #[error(transparent)]
    Select(#[from] SelectError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PipelineConfig {
    pub k_sentences: usize,
    pub k_documents: usize,
    pub workers: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            k_sentences: DEFAULT_K_SENTENCES,
            k_documents: DEFAULT_K_DOCUMENTS,
            workers: 1,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.k_sentences < 1 || self.k_documents < 1 {
            return Err(PipelineError::Config("k_sentences and k_documents must be >= 1".into()));
        }
        if self.workers < 1 {
            return Err(PipelineError::Config("workers must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectedSentence {
    pub doc_rank: usize,
    pub doc_id: String,
    pub sentence_index: usize,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub question_id: String,
    pub selector: String,
    pub selected: Vec<SelectedSentence>,
    /// Selected sentences' tokens joined in selection order.
    pub context: Vec<String>,
    /// Selection-stage wall time (scoring, ranking, concatenation).
    pub latency_ms: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub answer: Option<ReaderAnswer>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

fn truncate(bundle: &RetrievalBundle, k: usize) -> Cow<'_, RetrievalBundle> {
    if bundle.documents.len() <= k {
        Cow::Borrowed(bundle)
    } else {
        Cow::Owned(bundle.truncated(k))
    }
}

fn select_one(
    bundle: &RetrievalBundle,
    selector: &dyn Selector,
    reader: Option<&ReaderAdapter>,
    config: &PipelineConfig,
) -> SelectionResult {
    let bundle = truncate(bundle, config.k_documents);
    let start = Instant::now();
    let outcome = score_all(selector, &bundle).and_then(|scored| {
        select_top_k(&scored, config.k_sentences).map(|top| {
            let context: Vec<String> = top
                .iter()
                .flat_map(|s| s.sentence.texts().map(str::to_string))
                .collect();
            let selected = top
                .iter()
                .map(|s| SelectedSentence {
                    doc_rank: s.doc_rank,
                    doc_id: s.sentence.doc_id.clone(),
                    sentence_index: s.sentence_index,
                    score: s.score.value(),
                })
                .collect::<Vec<_>>();
            (selected, context)
        })
    });
    let latency_ms = start.elapsed().as_secs_f64() * 1e3;
    let mut result = SelectionResult {
        question_id: bundle.question_id.clone(),
        selector: selector.name().to_string(),
        selected: Vec::new(),
        context: Vec::new(),
        latency_ms,
        answer: None,
        error: None,
    };
    match outcome {
        Ok((selected, context)) => {
            result.selected = selected;
            result.context = context;
        }
        Err(e) => {
            log::warn!("{}: selection failed: {e}", bundle.question_id);
            result.error = Some(e.to_string());
            return result;
        }
    }
    if let Some(reader) = reader {
        let question = bundle.question.texts().map(str::to_string).collect();
        match reader.read(&bundle.question_id, question, result.context.clone()) {
            Ok(answer) => result.answer = Some(answer),
            Err(e) => {
                log::warn!("{}: reader failed: {e}", bundle.question_id);
                result.error = Some(format!("reader: {e}"));
            }
        }
    }
    result
}

/// Runs selection (and reading, when a reader is given) for every bundle.
/// Per-question failures are recorded in the result and do not stop the
/// run. Output order follows the input regardless of worker count.
pub fn run_pipeline(
    bundles: &[RetrievalBundle],
    selector: &dyn Selector,
    reader: Option<&ReaderAdapter>,
    config: &PipelineConfig,
) -> Result<Vec<SelectionResult>, PipelineError> {
    config.validate()?;
    if config.workers == 1 || bundles.len() < 2 {
        return Ok(bundles
            .iter()
            .map(|b| select_one(b, selector, reader, config))
            .collect());
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<SelectionResult>>> = Mutex::new(vec![None; bundles.len()]);
    std::thread::scope(|scope| {
        for _ in 0..config.workers.min(bundles.len()) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= bundles.len() {
                    break;
                }
                let r = select_one(&bundles[i], selector, reader, config);
                slots.lock().expect("result lock")[i] = Some(r);
            });
        }
    });
    Ok(slots
        .into_inner()
        .expect("result lock")
        .into_iter()
        .map(|r| r.expect("every slot filled"))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionRecord {
    pub question_id: String,
    pub selector: String,
    pub recall_hit: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub em: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f1: Option<f64>,
    pub latency_ms: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub selector: String,
    /// Questions with at least one gold answer.
    pub questions: usize,
    /// Percentage of questions whose answer appears in the selected sentences.
    pub recall: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub em: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f1: Option<f64>,
    pub questions_per_second: f64,
    pub errors: usize,
    pub records: Vec<QuestionRecord>,
}

fn resolve<'a>(bundle: &'a RetrievalBundle, s: &SelectedSentence) -> Result<&'a AnnotatedSentence, PipelineError> {
    bundle
        .documents
        .iter()
        .find(|d| d.rank == s.doc_rank)
        .and_then(|d| d.sentences.get(s.sentence_index))
        .ok_or_else(|| {
            PipelineError::Alignment(format!(
                "question `{}` has no sentence at rank {} index {}",
                bundle.question_id, s.doc_rank, s.sentence_index
            ))
        })
}

/// Recall over the selected sentences; EM and F1 only when `with_reader`.
/// Questions without gold answers are skipped.
pub fn evaluate(
    results: &[SelectionResult],
    bundles: &[RetrievalBundle],
    with_reader: bool,
) -> Result<EvalReport, PipelineError> {
    let by_id: HashMap<&str, &RetrievalBundle> = bundles.iter().map(|b| (b.question_id.as_str(), b)).collect();
    let selector = results.first().map(|r| r.selector.clone()).unwrap_or_default();
    let mut records = Vec::with_capacity(results.len());
    let (mut hits, mut em_sum, mut f1_sum, mut latency, mut errors) = (0usize, 0.0, 0.0, 0.0, 0usize);
    for r in results {
        let bundle = by_id
            .get(r.question_id.as_str())
            .ok_or_else(|| PipelineError::Alignment(format!("unknown question `{}`", r.question_id)))?;
        latency += r.latency_ms;
        if r.error.is_some() {
            errors += 1;
        }
        if bundle.answers.is_empty() {
            continue;
        }
        let sentences = r
            .selected
            .iter()
            .map(|s| resolve(bundle, s))
            .collect::<Result<Vec<_>, _>>()?;
        let recall_hit = contains_answer(sentences, &bundle.answers);
        hits += usize::from(recall_hit);
        let (em, f1) = if with_reader {
            let (em, f1) = match &r.answer {
                Some(a) => (
                    if exact_match(&a.answer, &bundle.answers) {
                        100.0
                    } else {
                        0.0
                    },
                    100.0 * f1_score(&a.answer, &bundle.answers),
                ),
                None => (0.0, 0.0),
            };
            em_sum += em;
            f1_sum += f1;
            (Some(em), Some(f1))
        } else {
            (None, None)
        };
        records.push(QuestionRecord {
            question_id: r.question_id.clone(),
            selector: r.selector.clone(),
            recall_hit,
            em,
            f1,
            latency_ms: r.latency_ms,
            error: r.error.clone(),
        });
    }
    let n = records.len();
    let pct = |x: f64| if n == 0 { 0.0 } else { x / n as f64 };
    Ok(EvalReport {
        selector,
        questions: n,
        recall: pct(100.0 * hits as f64),
        em: with_reader.then(|| pct(em_sum)),
        f1: with_reader.then(|| pct(f1_sum)),
        questions_per_second: if latency > 0.0 {
            results.len() as f64 / (latency / 1e3)
        } else {
            0.0
        },
        errors,
        records,
    })
}

/// Percentage of labeled questions whose answer occurs anywhere in the top
/// `k_documents` documents: the recall of selecting every sentence.
pub fn retrieval_upper_bound(bundles: &[RetrievalBundle], k_documents: usize) -> f64 {
    let labeled: Vec<_> = bundles.iter().filter(|b| !b.answers.is_empty()).collect();
    if labeled.is_empty() {
        return 0.0;
    }
    let hits = labeled
        .iter()
        .filter(|b| {
            let m = AnswerMatcher::new(&b.answers);
            b.documents
                .iter()
                .take(k_documents)
                .flat_map(|d| &d.sentences)
                .any(|s| m.matches(s))
        })
        .count();
    100.0 * hits as f64 / labeled.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub selector: String,
    pub sample_size: usize,
    pub seed: u64,
    pub workers: usize,
    pub sampled_ids: Vec<String>,
    pub sentences: usize,
    pub total_selection_ms: f64,
    pub questions_per_second: f64,
}

/// Reproducible question sample: indices drawn without replacement, in
/// dataset order.
pub fn sample_questions(n: usize, sample_size: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = sample(&mut rng, n, sample_size.min(n)).into_vec();
    idx.sort_unstable();
    idx
}

/// Times the selection stage over a seeded sample of questions.
pub fn benchmark(
    bundles: &[RetrievalBundle],
    selector: &dyn Selector,
    config: &PipelineConfig,
    sample_size: usize,
    seed: u64,
) -> Result<BenchReport, PipelineError> {
    config.validate()?;
    let picked: Vec<RetrievalBundle> = sample_questions(bundles.len(), sample_size, seed)
        .into_iter()
        .map(|i| bundles[i].truncated(config.k_documents))
        .collect();
    let start = Instant::now();
    let results = run_pipeline(&picked, selector, None, config)?;
    let elapsed = start.elapsed().as_secs_f64();
    let failed = results.iter().filter(|r| r.error.is_some()).count();
    if failed > 0 {
        log::warn!("{failed} of {} benchmark questions failed", results.len());
    }
    Ok(BenchReport {
        selector: selector.name().to_string(),
        sample_size: picked.len(),
        seed,
        workers: config.workers,
        sampled_ids: picked.iter().map(|b| b.question_id.clone()).collect(),
        sentences: picked.iter().map(RetrievalBundle::sentence_count).sum(),
        total_selection_ms: elapsed * 1e3,
        questions_per_second: if elapsed > 0.0 {
            picked.len() as f64 / elapsed
        } else {
            0.0
        },
    })
}
