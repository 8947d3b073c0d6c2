//! Bag-of-words selector: averaged word vectors for question and sentence,
//! scored by a one-hidden-layer network over `[q; s; q * s]`.

use std::path::Path;
use std::sync::Arc;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Document, RetrievalBundle, Token};
use crate::embedding::EmbeddingTable;
use crate::metrics::AnswerMatcher;
use crate::modelio::{ModelFile, ModelIoError};
use crate::nn::{bce_with_logit, dot, hadamard, relu, sigmoid, Tensor};
use crate::selector::{QuestionScorer, SelectError, SelectionScore, Selector};
use crate::training::{epoch_batches, TrainError, TrainReport};

pub const MODEL_KIND: &str = "bow";

#[derive(Debug, Clone, PartialEq)]
pub struct BowModel {
    pub dim: usize,
    pub hidden: usize,
    pub w1: Tensor,
    pub b1: Tensor,
    pub w2: Tensor,
    pub b2: Tensor,
}

#[derive(Debug, Clone)]
pub struct BowTrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub negatives_per_positive: usize,
    pub batch_size: usize,
    pub hidden: usize,
    pub seed: u64,
}

impl Default for BowTrainConfig {
    fn default() -> Self {
        BowTrainConfig {
            learning_rate: 0.05,
            epochs: 5,
            negatives_per_positive: 5,
            batch_size: 64,
            hidden: 100,
            seed: 7,
        }
    }
}

/// One training pair of encoded question and sentence.
#[derive(Debug, Clone, PartialEq)]
pub struct BowExample {
    pub question: Vec<f64>,
    pub sentence: Vec<f64>,
    pub label: bool,
}

/// Mean of the token embeddings; the zero vector for no tokens.
pub fn bow_encode(tokens: &[Token], table: &EmbeddingTable) -> Vec<f64> {
    let mut acc = vec![0.0; table.dim()];
    for t in tokens {
        table.accumulate(&t.text, &mut acc);
    }
    if !tokens.is_empty() {
        let n = tokens.len() as f64;
        acc.iter_mut().for_each(|a| *a /= n);
    }
    acc
}

fn features(q: &[f64], s: &[f64]) -> Vec<f64> {
    let mut x = Vec::with_capacity(3 * q.len());
    x.extend_from_slice(q);
    x.extend_from_slice(s);
    x.extend(hadamard(q, s));
    x
}

struct Forward {
    x: Vec<f64>,
    pre: Vec<f64>,
    act: Vec<f64>,
    logit: f64,
}

impl BowModel {
    /// Glorot-uniform weights, zero biases.
    pub fn init(dim: usize, hidden: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s1 = (6.0 / (3 * dim + hidden) as f64).sqrt();
        let s2 = (6.0 / (hidden + 1) as f64).sqrt();
        BowModel {
            dim,
            hidden,
            w1: Tensor::uniform(hidden, 3 * dim, s1, &mut rng),
            b1: Tensor::vector(hidden),
            w2: Tensor::uniform(hidden, 1, s2, &mut rng),
            b2: Tensor::vector(1),
        }
    }

    pub fn zeros(dim: usize, hidden: usize) -> Self {
        BowModel {
            dim,
            hidden,
            w1: Tensor::zeros(hidden, 3 * dim),
            b1: Tensor::vector(hidden),
            w2: Tensor::vector(hidden),
            b2: Tensor::vector(1),
        }
    }

    pub fn params(&self) -> [&Tensor; 4] {
        [&self.w1, &self.b1, &self.w2, &self.b2]
    }

    pub fn params_mut(&mut self) -> [&mut Tensor; 4] {
        [&mut self.w1, &mut self.b1, &mut self.w2, &mut self.b2]
    }

    fn forward(&self, q: &[f64], s: &[f64]) -> Forward {
        let x = features(q, s);
        let pre = crate::nn::add(&self.w1.matvec(&x), &self.b1.data);
        let act: Vec<f64> = pre.iter().map(|&z| relu(z)).collect();
        let logit = dot(&self.w2.data, &act) + self.b2.data[0];
        Forward { x, pre, act, logit }
    }

    fn check_shapes(&self, q: &[f64], s: &[f64]) -> Result<(), SelectError> {
        if q.len() != self.dim || s.len() != self.dim {
            return Err(SelectError::Argument(format!(
                "expected vectors of length {}, got {} and {}",
                self.dim,
                q.len(),
                s.len()
            )));
        }
        Ok(())
    }

    pub fn logit(&self, q: &[f64], s: &[f64]) -> Result<f64, SelectError> {
        self.check_shapes(q, s)?;
        Ok(self.forward(q, s).logit)
    }

    /// Mean binary cross-entropy over `batch` and its gradient.
    pub fn loss_and_grad(&self, examples: &[BowExample], batch: &[usize]) -> (f64, BowModel) {
        let mut grad = BowModel::zeros(self.dim, self.hidden);
        let mut loss = 0.0;
        let n = batch.len().max(1) as f64;
        for &i in batch {
            let ex = &examples[i];
            let f = self.forward(&ex.question, &ex.sentence);
            loss += bce_with_logit(f.logit, ex.label);
            let dlogit = (sigmoid(f.logit) - f64::from(u8::from(ex.label))) / n;
            grad.b2.data[0] += dlogit;
            let mut dpre = vec![0.0; self.hidden];
            for (h, d) in dpre.iter_mut().enumerate() {
                grad.w2.data[h] += dlogit * f.act[h];
                if f.pre[h] > 0.0 {
                    *d = dlogit * self.w2.data[h];
                }
            }
            grad.b1.add_acc(&dpre);
            grad.w1.outer_acc(&dpre, &f.x);
        }
        (loss / n, grad)
    }

    pub fn mean_loss(&self, examples: &[BowExample]) -> f64 {
        let all: Vec<usize> = (0..examples.len()).collect();
        let n = all.len().max(1) as f64;
        all.iter()
            .map(|&i| {
                bce_with_logit(
                    self.forward(&examples[i].question, &examples[i].sentence).logit,
                    examples[i].label,
                )
            })
            .sum::<f64>()
            / n
    }

    /// Fraction of examples classified correctly at probability 0.5.
    pub fn accuracy(&self, examples: &[BowExample]) -> f64 {
        if examples.is_empty() {
            return 0.0;
        }
        let correct = examples
            .iter()
            .filter(|ex| (self.forward(&ex.question, &ex.sentence).logit > 0.0) == ex.label)
            .count();
        correct as f64 / examples.len() as f64
    }

    pub fn to_model_file(&self) -> ModelFile {
        let mut m = ModelFile::new(MODEL_KIND);
        m.push("w1", &self.w1);
        m.push("b1", &self.b1);
        m.push("w2", &self.w2);
        m.push("b2", &self.b2);
        m
    }

    pub fn from_model_file(mut m: ModelFile) -> Result<Self, ModelIoError> {
        m.expect_kind(MODEL_KIND)?;
        let (hidden, in3) = m.shape_of("w1").ok_or_else(|| ModelIoError::Shape {
            name: "w1".into(),
            message: "missing".into(),
        })?;
        if in3 % 3 != 0 {
            return Err(ModelIoError::Shape {
                name: "w1".into(),
                message: format!("input width {in3} is not a multiple of 3"),
            });
        }
        let dim = in3 / 3;
        Ok(BowModel {
            dim,
            hidden,
            w1: m.take("w1", hidden, in3)?,
            b1: m.take("b1", hidden, 1)?,
            w2: m.take("w2", hidden, 1)?,
            b2: m.take("b2", 1, 1)?,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ModelIoError> {
        self.to_model_file().save(path)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ModelIoError> {
        Self::from_model_file(ModelFile::load(path)?)
    }
}

/// `sigmoid(w2 . relu(W1 [q; s; q*s] + b1) + b2)`
pub fn bow_score(q_vec: &[f64], s_vec: &[f64], model: &BowModel) -> Result<SelectionScore, SelectError> {
    SelectionScore::new(sigmoid(model.logit(q_vec, s_vec)?))
}

/// Sentence-level examples: every answer-bearing sentence is a positive;
/// negatives are drawn uniformly without replacement from the rest of the
/// same bundle.
pub fn build_bow_examples(
    bundles: &[RetrievalBundle],
    table: &EmbeddingTable,
    negatives_per_positive: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<BowExample> {
    let mut examples = Vec::new();
    for bundle in bundles {
        if bundle.answers.is_empty() {
            continue;
        }
        let matcher = AnswerMatcher::new(&bundle.answers);
        let q = bow_encode(&bundle.question.tokens, table);
        let (pos, neg): (Vec<_>, Vec<_>) = bundle.sentences().map(|(_, s)| s).partition(|s| matcher.matches(s));
        if pos.is_empty() {
            continue;
        }
        for s in &pos {
            examples.push(BowExample {
                question: q.clone(),
                sentence: bow_encode(&s.tokens, table),
                label: true,
            });
        }
        let want = (pos.len() * negatives_per_positive).min(neg.len());
        let mut picked = sample(rng, neg.len(), want).into_vec();
        picked.sort_unstable();
        for i in picked {
            examples.push(BowExample {
                question: q.clone(),
                sentence: bow_encode(&neg[i].tokens, table),
                label: false,
            });
        }
    }
    examples
}

pub fn train_bow_examples(
    examples: &[BowExample],
    dim: usize,
    config: &BowTrainConfig,
    rng: &mut ChaCha8Rng,
) -> Result<(BowModel, TrainReport), TrainError> {
    if config.learning_rate <= 0.0 || config.epochs < 1 {
        return Err(TrainError::Config(
            "learning rate must be positive and epochs >= 1".into(),
        ));
    }
    let positives = examples.iter().filter(|e| e.label).count();
    if positives == 0 {
        return Err(TrainError::NoPositives);
    }
    let mut model = BowModel::init(dim, config.hidden, config.seed);
    let initial_loss = model.mean_loss(examples);
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        for batch in epoch_batches(examples.len(), config.batch_size, rng) {
            let (loss, grad) = model.loss_and_grad(examples, &batch);
            if !loss.is_finite() {
                return Err(TrainError::Diverged { epoch });
            }
            for (p, g) in model.params_mut().into_iter().zip(grad.params()) {
                p.step(g, config.learning_rate);
            }
        }
        let loss = model.mean_loss(examples);
        if !loss.is_finite() {
            return Err(TrainError::Diverged { epoch });
        }
        log::debug!("bow epoch {} loss {:.6}", epoch + 1, loss);
        epoch_losses.push(loss);
    }
    Ok((
        model,
        TrainReport {
            examples: examples.len(),
            positives,
            initial_loss,
            epoch_losses,
        },
    ))
}

/// Trains on distantly supervised sentence labels. All sampling and
/// shuffling flows from `config.seed`.
pub fn train_bow(
    bundles: &[RetrievalBundle],
    table: &EmbeddingTable,
    config: &BowTrainConfig,
) -> Result<(BowModel, TrainReport), TrainError> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let examples = build_bow_examples(bundles, table, config.negatives_per_positive, &mut rng);
    train_bow_examples(&examples, table.dim(), config, &mut rng)
}

/// Accuracy on examples built from `bundles` with the training recipe,
/// sampled from `seed`.
pub fn heldout_accuracy(
    model: &BowModel,
    bundles: &[RetrievalBundle],
    table: &EmbeddingTable,
    negatives_per_positive: usize,
    seed: u64,
) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    model.accuracy(&build_bow_examples(bundles, table, negatives_per_positive, &mut rng))
}

#[derive(Debug, Clone)]
pub struct BowSelector {
    model: BowModel,
    table: Arc<EmbeddingTable>,
}

impl BowSelector {
    pub fn new(model: BowModel, table: Arc<EmbeddingTable>) -> Result<Self, SelectError> {
        if model.dim != table.dim() {
            return Err(SelectError::Argument(format!(
                "model dim {} does not match embedding dim {}",
                model.dim,
                table.dim()
            )));
        }
        Ok(BowSelector { model, table })
    }
}

struct PreparedBow<'b> {
    selector: &'b BowSelector,
    question: Vec<f64>,
}

impl QuestionScorer for PreparedBow<'_> {
    fn score(&self, doc: &Document, sentence_index: usize) -> Result<SelectionScore, SelectError> {
        let sentence = doc
            .sentences
            .get(sentence_index)
            .ok_or_else(|| SelectError::Argument(format!("sentence {sentence_index} out of range")))?;
        let s = bow_encode(&sentence.tokens, &self.selector.table);
        bow_score(&self.question, &s, &self.selector.model)
    }
}

impl Selector for BowSelector {
    fn name(&self) -> &str {
        "bow"
    }

    fn prepare<'b>(&'b self, bundle: &'b RetrievalBundle) -> Result<Box<dyn QuestionScorer + 'b>, SelectError> {
        Ok(Box::new(PreparedBow {
            selector: self,
            question: bow_encode(&bundle.question.tokens, &self.table),
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> EmbeddingTable {
        let mut t = EmbeddingTable::new(2, 16);
        t.insert("a", vec![1.0, 2.0]);
        t.insert("b", vec![-1.0, -2.0]);
        t.insert("c", vec![0.5, 4.0]);
        t
    }

    fn tok(w: &str) -> Token {
        Token::new(w, w, "NN", "O")
    }

    #[test]
    fn encode_means() {
        let t = table();
        assert_eq!(bow_encode(&[tok("a")], &t), vec![1.0, 2.0]);
        assert_eq!(bow_encode(&[tok("a"), tok("b")], &t), vec![0.0, 0.0]);
        assert_eq!(bow_encode(&[], &t), vec![0.0, 0.0]);
        // (1 - 1 + 0.5) / 3, (2 - 2 + 4) / 3
        let m = bow_encode(&[tok("a"), tok("b"), tok("c")], &t);
        assert!((m[0] - 1.0 / 6.0).abs() < 1e-15 && (m[1] - 4.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn zero_model_scores_half() {
        let m = BowModel::zeros(2, 3);
        assert_eq!(bow_score(&[1.0, 2.0], &[3.0, 4.0], &m).unwrap().value(), 0.5);
        assert!(bow_score(&[1.0], &[3.0, 4.0], &m).is_err());
    }

    #[test]
    fn forward_matches_hand_computation() {
        // dim 1, hidden 2: x = [q, s, q*s] = [2, 3, 6]
        let m = BowModel {
            dim: 1,
            hidden: 2,
            w1: Tensor::from_vec(2, 3, vec![0.1, -0.2, 0.05, -1.0, 0.0, 0.0]),
            b1: Tensor::from_vec(2, 1, vec![0.5, 0.3]),
            w2: Tensor::from_vec(2, 1, vec![2.0, 7.0]),
            b2: Tensor::from_vec(1, 1, vec![-0.25]),
        };
        // h1 = relu(0.2 - 0.6 + 0.3 + 0.5) = 0.4; h2 = relu(-2 + 0.3) = 0
        // logit = 0.8 - 0.25 = 0.55
        let p = bow_score(&[2.0], &[3.0], &m).unwrap().value();
        assert!((p - 1.0 / (1.0 + (-0.55f64).exp())).abs() < 1e-12);
    }

    #[test]
    fn model_file_round_trip() {
        let m = BowModel::init(3, 4, 1);
        let back = BowModel::from_model_file(ModelFile::from_bytes(&m.to_model_file().to_bytes()).unwrap()).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn no_positives_is_an_error() {
        let ex = vec![BowExample {
            question: vec![0.0, 0.0],
            sentence: vec![1.0, 1.0],
            label: false,
        }];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            train_bow_examples(&ex, 2, &BowTrainConfig::default(), &mut rng),
            Err(TrainError::NoPositives)
        ));
    }
}
