//! Training data construction and the weighted mini-batch trainer.

use std::collections::{BTreeMap, HashSet};

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::model::{AnsFindModel, DEFAULT_THRESHOLD};
use super::{
    answer_set, candidate_set, embed_tokens, extract_candidates, jaccard, question_prefix, span_features, Candidate,
};
use crate::corpus::RetrievalBundle;
use crate::embedding::EmbeddingTable;
use crate::metrics::{normalize_answer, AnswerMatcher};
use crate::nn::{bce_with_logit, sigmoid};
use crate::training::{epoch_batches, TrainError, TrainReport};

pub const NEGATIVES_PER_POSITIVE: usize = 20;
pub const POSITIVE_WEIGHT: f64 = 5.0;

/// A candidate span with its binary label. `group` numbers the
/// answer-bearing sentence whose positive this instance was sampled for.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledCandidate {
    pub doc_index: usize,
    pub sentence_index: usize,
    pub candidate: Candidate,
    pub label: bool,
    pub group: usize,
}

/// For every sentence containing a gold answer: the constituent with the
/// highest Jaccard overlap with any gold answer (ties to the smallest span
/// position) and up to `negatives` other constituents of the bundle drawn
/// uniformly without replacement. Constituents whose text is itself a gold
/// answer are never used as negatives.
pub fn build_training_instances(
    bundle: &RetrievalBundle,
    negatives: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<LabeledCandidate>, TrainError> {
    if bundle.answers.is_empty() {
        return Err(TrainError::Data(format!(
            "question `{}` has no gold answers",
            bundle.question_id
        )));
    }
    let mut all = Vec::new();
    for (di, doc) in bundle.documents.iter().enumerate() {
        for (si, s) in doc.sentences.iter().enumerate() {
            for c in extract_candidates(s) {
                all.push((di, si, c));
            }
        }
    }
    if all.is_empty() {
        return Err(TrainError::Data(format!(
            "question `{}` has no candidates",
            bundle.question_id
        )));
    }
    let matcher = AnswerMatcher::new(&bundle.answers);
    let golds: Vec<HashSet<String>> = bundle.answers.iter().map(|a| answer_set(a)).collect();
    let gold_texts: HashSet<String> = bundle.answers.iter().map(|a| normalize_answer(a)).collect();
    let is_gold_text = |di: usize, si: usize, c: Candidate| {
        let s = &bundle.documents[di].sentences[si];
        let text: Vec<&str> = s.tokens[c.start..c.end].iter().map(|t| t.text.as_str()).collect();
        gold_texts.contains(&normalize_answer(&text.join(" ")))
    };

    let mut out = Vec::new();
    let mut group = 0;
    for (di, doc) in bundle.documents.iter().enumerate() {
        for (si, s) in doc.sentences.iter().enumerate() {
            if !matcher.matches(s) {
                continue;
            }
            let mut best: Option<(f64, Candidate)> = None;
            for c in extract_candidates(s) {
                let cs = candidate_set(s, c);
                let score = golds.iter().map(|g| jaccard(&cs, g)).fold(0.0, f64::max);
                let better = match best {
                    None => true,
                    Some((b, bc)) => score > b || (score == b && c < bc),
                };
                if better {
                    best = Some((score, c));
                }
            }
            let Some((score, positive)) = best.filter(|(score, _)| *score > 0.0) else {
                log::debug!(
                    "{}: answer sentence {di}/{si} has no overlapping constituent",
                    bundle.question_id
                );
                continue;
            };
            log::trace!("{}: positive {:?} jaccard {score:.3}", bundle.question_id, positive);
            out.push(LabeledCandidate {
                doc_index: di,
                sentence_index: si,
                candidate: positive,
                label: true,
                group,
            });
            let pool: Vec<&(usize, usize, Candidate)> = all
                .iter()
                .filter(|&&(d, i, c)| !(d == di && i == si && c == positive) && !is_gold_text(d, i, c))
                .collect();
            let mut picked = sample(rng, pool.len(), negatives.min(pool.len())).into_vec();
            picked.sort_unstable();
            for p in picked {
                let &(d, i, c) = pool[p];
                out.push(LabeledCandidate {
                    doc_index: d,
                    sentence_index: i,
                    candidate: c,
                    label: false,
                    group,
                });
            }
            group += 1;
        }
    }
    Ok(out)
}

/// Precomputed inputs of one labeled candidate. Embeddings are frozen, so
/// everything except the learned parameters can be computed once.
#[derive(Debug, Clone, PartialEq)]
pub struct AnsFindInstance {
    /// Index into [`AnsFindData::questions`].
    pub question: usize,
    /// `[inside; left; right]` window means, length `3d`.
    pub span: Vec<f64>,
    pub first: Vec<f64>,
    pub last: Vec<f64>,
    pub label: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AnsFindData {
    /// Embedded question prefixes.
    pub questions: Vec<Vec<Vec<f64>>>,
    pub instances: Vec<AnsFindInstance>,
}

pub fn featurize(
    bundles: &[RetrievalBundle],
    labeled: &[Vec<LabeledCandidate>],
    table: &EmbeddingTable,
) -> AnsFindData {
    let mut data = AnsFindData::default();
    for (bundle, items) in bundles.iter().zip(labeled) {
        if items.is_empty() {
            continue;
        }
        let q = data.questions.len();
        data.questions
            .push(embed_tokens(question_prefix(&bundle.question), table));
        let mut cache: BTreeMap<(usize, usize), Vec<Vec<f64>>> = BTreeMap::new();
        for item in items {
            let e = cache.entry((item.doc_index, item.sentence_index)).or_insert_with(|| {
                embed_tokens(
                    &bundle.documents[item.doc_index].sentences[item.sentence_index].tokens,
                    table,
                )
            });
            let c = item.candidate;
            data.instances.push(AnsFindInstance {
                question: q,
                span: span_features(e, c, table.dim()),
                first: e[c.start].clone(),
                last: e[c.end - 1].clone(),
                label: item.label,
            });
        }
    }
    data
}

impl AnsFindData {
    pub fn positives(&self) -> usize {
        self.instances.iter().filter(|i| i.label).count()
    }

    /// Weighted binary cross-entropy averaged over `batch`, with its
    /// gradient. Positive instances count `positive_weight` times.
    pub fn loss_and_grad(&self, model: &AnsFindModel, batch: &[usize], positive_weight: f64) -> (f64, AnsFindModel) {
        let mut grad = AnsFindModel::zeros(model.dim, model.hidden);
        let n = batch.len().max(1) as f64;
        let mut by_question: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for &i in batch {
            by_question.entry(self.instances[i].question).or_default().push(i);
        }
        let mut loss = 0.0;
        for (q, items) in by_question {
            let prefix = &self.questions[q];
            let (h_q, steps) = model.encode_trace(prefix);
            let mut dh_q = vec![0.0; model.dim];
            for i in items {
                let inst = &self.instances[i];
                let h_i = model.project_span(&inst.span);
                let trace = model.score_trace(&h_q, &h_i, &inst.first, &inst.last);
                let w = if inst.label { positive_weight } else { 1.0 };
                loss += w * bce_with_logit(trace.logit, inst.label);
                let dlogit = w * (sigmoid(trace.logit) - f64::from(u8::from(inst.label))) / n;
                let d = model.score_backward(&trace, &inst.span, dlogit, &mut grad);
                dh_q.iter_mut().zip(d).for_each(|(a, b)| *a += b);
            }
            model.encode_backward(prefix, &steps, &dh_q, &mut grad);
        }
        (loss / n, grad)
    }

    pub fn loss(&self, model: &AnsFindModel, batch: &[usize], positive_weight: f64) -> f64 {
        let n = batch.len().max(1) as f64;
        let mut encoded: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
        let mut loss = 0.0;
        for &i in batch {
            let inst = &self.instances[i];
            let h_q = encoded
                .entry(inst.question)
                .or_insert_with(|| model.encode(&self.questions[inst.question]));
            let h_i = model.project_span(&inst.span);
            let logit = model.score_trace(h_q, &h_i, &inst.first, &inst.last).logit;
            let w = if inst.label { positive_weight } else { 1.0 };
            loss += w * bce_with_logit(logit, inst.label);
        }
        loss / n
    }

    pub fn probabilities(&self, model: &AnsFindModel) -> Vec<f64> {
        let encoded: Vec<Vec<f64>> = self.questions.iter().map(|q| model.encode(q)).collect();
        self.instances
            .iter()
            .map(|inst| {
                let h_i = model.project_span(&inst.span);
                sigmoid(
                    model
                        .score_trace(&encoded[inst.question], &h_i, &inst.first, &inst.last)
                        .logit,
                )
            })
            .collect()
    }

    /// Fraction of instances on the right side of the model threshold.
    pub fn accuracy(&self, model: &AnsFindModel) -> f64 {
        if self.instances.is_empty() {
            return 0.0;
        }
        let probs = self.probabilities(model);
        let correct = probs
            .iter()
            .zip(&self.instances)
            .filter(|(p, inst)| (**p > model.threshold) == inst.label)
            .count();
        correct as f64 / self.instances.len() as f64
    }
}

#[derive(Debug, Clone)]
pub struct AnsFindTrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub hidden: usize,
    pub init_scale: f64,
    pub positive_weight: f64,
    pub negatives: usize,
    pub threshold: f64,
    pub seed: u64,
}

impl Default for AnsFindTrainConfig {
    fn default() -> Self {
        AnsFindTrainConfig {
            learning_rate: 0.02,
            epochs: 5,
            batch_size: 64,
            hidden: 200,
            init_scale: 0.05,
            positive_weight: POSITIVE_WEIGHT,
            negatives: NEGATIVES_PER_POSITIVE,
            threshold: DEFAULT_THRESHOLD,
            seed: 7,
        }
    }
}

pub fn train_ansfind(
    data: &AnsFindData,
    dim: usize,
    config: &AnsFindTrainConfig,
    rng: &mut ChaCha8Rng,
) -> Result<(AnsFindModel, TrainReport), TrainError> {
    if config.learning_rate <= 0.0 || config.epochs < 1 || !(config.threshold > 0.0 && config.threshold < 1.0) {
        return Err(TrainError::Config(
            "learning rate must be positive, epochs >= 1 and threshold in (0, 1)".into(),
        ));
    }
    let positives = data.positives();
    if positives == 0 {
        return Err(TrainError::NoPositives);
    }
    let mut model = AnsFindModel::init(dim, config.hidden, config.init_scale, config.seed);
    model.threshold = config.threshold;
    let all: Vec<usize> = (0..data.instances.len()).collect();
    let initial_loss = data.loss(&model, &all, config.positive_weight);
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        for batch in epoch_batches(data.instances.len(), config.batch_size, rng) {
            let (loss, grad) = data.loss_and_grad(&model, &batch, config.positive_weight);
            if !loss.is_finite() {
                return Err(TrainError::Diverged { epoch });
            }
            for (p, g) in model.params_mut().into_iter().zip(grad.params()) {
                p.step(g, config.learning_rate);
            }
        }
        let loss = data.loss(&model, &all, config.positive_weight);
        if !loss.is_finite() || !model.is_finite() {
            return Err(TrainError::Diverged { epoch });
        }
        log::debug!("ansfind epoch {} loss {:.6}", epoch + 1, loss);
        epoch_losses.push(loss);
    }
    Ok((
        model,
        TrainReport {
            examples: data.instances.len(),
            positives,
            initial_loss,
            epoch_losses,
        },
    ))
}

/// Labels and featurizes every answerable bundle. Bundles whose answer
/// sentences yield no usable positive are skipped.
pub fn prepare_ansfind_data(
    bundles: &[RetrievalBundle],
    table: &EmbeddingTable,
    negatives: usize,
    rng: &mut ChaCha8Rng,
) -> Result<AnsFindData, TrainError> {
    let mut used = Vec::new();
    let mut labels = Vec::new();
    for b in bundles.iter().filter(|b| !b.answers.is_empty()) {
        match build_training_instances(b, negatives, rng) {
            Ok(v) => {
                used.push(b.clone());
                labels.push(v);
            }
            Err(TrainError::Data(msg)) => log::debug!("skipping: {msg}"),
            Err(e) => return Err(e),
        }
    }
    Ok(featurize(&used, &labels, table))
}

/// Accuracy at the model's threshold on instances built from `bundles` with
/// the training recipe, sampled from `seed`.
pub fn heldout_accuracy(
    model: &AnsFindModel,
    bundles: &[RetrievalBundle],
    table: &EmbeddingTable,
    negatives: usize,
    seed: u64,
) -> Result<f64, TrainError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = prepare_ansfind_data(bundles, table, negatives, &mut rng)?;
    if data.instances.is_empty() {
        return Err(TrainError::Data("no held-out instances".into()));
    }
    Ok(data.accuracy(model))
}

/// Builds instances from labeled bundles and trains. Sampling and shuffling
/// share one generator seeded from `config.seed`.
pub fn train_ansfind_bundles(
    bundles: &[RetrievalBundle],
    table: &EmbeddingTable,
    config: &AnsFindTrainConfig,
) -> Result<(AnsFindModel, TrainReport), TrainError> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let data = prepare_ansfind_data(bundles, table, config.negatives, &mut rng)?;
    train_ansfind(&data, table.dim(), config, &mut rng)
}
