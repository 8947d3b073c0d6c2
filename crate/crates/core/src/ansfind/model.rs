//! Parameters and hand-written forward/backward passes of the answer-span
//! classifier: a GRU over the question prefix, a linear span projection and
//! a two-layer feedforward scorer.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::modelio::{ModelFile, ModelIoError};
use crate::nn::{dot, hadamard, relu, sigmoid, Tensor};

pub const MODEL_KIND: &str = "ansfind";
pub const DEFAULT_THRESHOLD: f64 = 0.3;

#[derive(Debug, Clone, PartialEq)]
pub struct AnsFindModel {
    pub dim: usize,
    pub hidden: usize,
    pub threshold: f64,
    // update gate
    pub w_z: Tensor,
    pub u_z: Tensor,
    pub b_z: Tensor,
    // reset gate
    pub w_r: Tensor,
    pub u_r: Tensor,
    pub b_r: Tensor,
    // candidate state
    pub w_n: Tensor,
    pub u_n: Tensor,
    pub b_n: Tensor,
    /// Span projection, `d x 3d`.
    pub proj_w: Tensor,
    pub proj_b: Tensor,
    /// First feedforward layer over the `5d` joint vector.
    pub ff1_w: Tensor,
    pub ff1_b: Tensor,
    pub ff2_w: Tensor,
    pub ff2_b: Tensor,
    /// Output vector `v`.
    pub out: Tensor,
}

/// Cached activations of one GRU step.
pub(crate) struct GruStep {
    h_prev: Vec<f64>,
    z: Vec<f64>,
    r: Vec<f64>,
    n: Vec<f64>,
}

/// Cached activations of one plausibility evaluation.
pub(crate) struct ScoreTrace {
    x: Vec<f64>,
    pre1: Vec<f64>,
    act1: Vec<f64>,
    hidden2: Vec<f64>,
    pub(crate) logit: f64,
}

impl AnsFindModel {
    pub fn zeros(dim: usize, hidden: usize) -> Self {
        let sq = || Tensor::zeros(dim, dim);
        AnsFindModel {
            dim,
            hidden,
            threshold: DEFAULT_THRESHOLD,
            w_z: sq(),
            u_z: sq(),
            b_z: Tensor::vector(dim),
            w_r: sq(),
            u_r: sq(),
            b_r: Tensor::vector(dim),
            w_n: sq(),
            u_n: sq(),
            b_n: Tensor::vector(dim),
            proj_w: Tensor::zeros(dim, 3 * dim),
            proj_b: Tensor::vector(dim),
            ff1_w: Tensor::zeros(hidden, 5 * dim),
            ff1_b: Tensor::vector(hidden),
            ff2_w: Tensor::zeros(hidden, hidden),
            ff2_b: Tensor::vector(hidden),
            out: Tensor::vector(hidden),
        }
    }

    /// Every parameter drawn from `uniform(-scale, scale)`.
    pub fn init(dim: usize, hidden: usize, scale: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = Self::zeros(dim, hidden);
        for p in m.params_mut() {
            *p = Tensor::uniform(p.rows, p.cols, scale, &mut rng);
        }
        m
    }

    pub const PARAM_NAMES: [&'static str; 16] = [
        "gru.w_z", "gru.u_z", "gru.b_z", "gru.w_r", "gru.u_r", "gru.b_r", "gru.w_n", "gru.u_n", "gru.b_n", "proj.w",
        "proj.b", "ff1.w", "ff1.b", "ff2.w", "ff2.b", "out.v",
    ];

    pub fn params(&self) -> [&Tensor; 16] {
        [
            &self.w_z,
            &self.u_z,
            &self.b_z,
            &self.w_r,
            &self.u_r,
            &self.b_r,
            &self.w_n,
            &self.u_n,
            &self.b_n,
            &self.proj_w,
            &self.proj_b,
            &self.ff1_w,
            &self.ff1_b,
            &self.ff2_w,
            &self.ff2_b,
            &self.out,
        ]
    }

    pub fn params_mut(&mut self) -> [&mut Tensor; 16] {
        [
            &mut self.w_z,
            &mut self.u_z,
            &mut self.b_z,
            &mut self.w_r,
            &mut self.u_r,
            &mut self.b_r,
            &mut self.w_n,
            &mut self.u_n,
            &mut self.b_n,
            &mut self.proj_w,
            &mut self.proj_b,
            &mut self.ff1_w,
            &mut self.ff1_b,
            &mut self.ff2_w,
            &mut self.ff2_b,
            &mut self.out,
        ]
    }

    pub fn param_count(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.params().iter().all(|p| p.is_finite())
    }

    fn gru_step(&self, x: &[f64], h: &[f64]) -> GruStep {
        let gate = |w: &Tensor, u: &Tensor, b: &Tensor| -> Vec<f64> {
            let wx = w.matvec(x);
            let uh = u.matvec(h);
            (0..self.dim).map(|i| sigmoid(wx[i] + uh[i] + b.data[i])).collect()
        };
        let z = gate(&self.w_z, &self.u_z, &self.b_z);
        let r = gate(&self.w_r, &self.u_r, &self.b_r);
        let rh = hadamard(&r, h);
        let wx = self.w_n.matvec(x);
        let urh = self.u_n.matvec(&rh);
        let n = (0..self.dim)
            .map(|i| (wx[i] + urh[i] + self.b_n.data[i]).tanh())
            .collect();
        GruStep {
            h_prev: h.to_vec(),
            z,
            r,
            n,
        }
    }

    fn step_output(step: &GruStep) -> Vec<f64> {
        (0..step.z.len())
            .map(|i| (1.0 - step.z[i]) * step.n[i] + step.z[i] * step.h_prev[i])
            .collect()
    }

    /// Runs the recurrence from a zero state; returns the final state and
    /// the per-step caches.
    pub(crate) fn encode_trace(&self, inputs: &[Vec<f64>]) -> (Vec<f64>, Vec<GruStep>) {
        let mut h = vec![0.0; self.dim];
        let mut steps = Vec::with_capacity(inputs.len());
        for x in inputs {
            let step = self.gru_step(x, &h);
            h = Self::step_output(&step);
            steps.push(step);
        }
        (h, steps)
    }

    pub fn encode(&self, inputs: &[Vec<f64>]) -> Vec<f64> {
        self.encode_trace(inputs).0
    }

    /// Back-propagates `dh_final` through the recurrence into `grad`.
    pub(crate) fn encode_backward(
        &self,
        inputs: &[Vec<f64>],
        steps: &[GruStep],
        dh_final: &[f64],
        grad: &mut AnsFindModel,
    ) {
        let d = self.dim;
        let mut dh = dh_final.to_vec();
        for (x, s) in inputs.iter().zip(steps).rev() {
            let mut dh_prev = vec![0.0; d];
            let mut dz_pre = vec![0.0; d];
            let mut dn_pre = vec![0.0; d];
            for i in 0..d {
                let dz = dh[i] * (s.h_prev[i] - s.n[i]);
                let dn = dh[i] * (1.0 - s.z[i]);
                dh_prev[i] += dh[i] * s.z[i];
                dz_pre[i] = dz * s.z[i] * (1.0 - s.z[i]);
                dn_pre[i] = dn * (1.0 - s.n[i] * s.n[i]);
            }
            let rh = hadamard(&s.r, &s.h_prev);
            grad.w_n.outer_acc(&dn_pre, x);
            grad.u_n.outer_acc(&dn_pre, &rh);
            grad.b_n.add_acc(&dn_pre);
            let mut drh = vec![0.0; d];
            self.u_n.matvec_t_acc(&dn_pre, &mut drh);
            let mut dr_pre = vec![0.0; d];
            for i in 0..d {
                dh_prev[i] += drh[i] * s.r[i];
                let dr = drh[i] * s.h_prev[i];
                dr_pre[i] = dr * s.r[i] * (1.0 - s.r[i]);
            }
            grad.w_z.outer_acc(&dz_pre, x);
            grad.u_z.outer_acc(&dz_pre, &s.h_prev);
            grad.b_z.add_acc(&dz_pre);
            self.u_z.matvec_t_acc(&dz_pre, &mut dh_prev);
            grad.w_r.outer_acc(&dr_pre, x);
            grad.u_r.outer_acc(&dr_pre, &s.h_prev);
            grad.b_r.add_acc(&dr_pre);
            self.u_r.matvec_t_acc(&dr_pre, &mut dh_prev);
            dh = dh_prev;
        }
    }

    /// `h_i = W_proj [inside; left; right] + b_proj`
    pub fn project_span(&self, span_features: &[f64]) -> Vec<f64> {
        crate::nn::add(&self.proj_w.matvec(span_features), &self.proj_b.data)
    }

    pub(crate) fn score_trace(&self, h_q: &[f64], h_i: &[f64], e_b: &[f64], e_e: &[f64]) -> ScoreTrace {
        let mut x = Vec::with_capacity(5 * self.dim);
        x.extend_from_slice(h_q);
        x.extend_from_slice(h_i);
        x.extend(hadamard(h_i, h_q));
        x.extend_from_slice(e_b);
        x.extend_from_slice(e_e);
        let pre1 = crate::nn::add(&self.ff1_w.matvec(&x), &self.ff1_b.data);
        let act1: Vec<f64> = pre1.iter().map(|&v| relu(v)).collect();
        let hidden2 = crate::nn::add(&self.ff2_w.matvec(&act1), &self.ff2_b.data);
        let logit = dot(&self.out.data, &hidden2);
        ScoreTrace {
            x,
            pre1,
            act1,
            hidden2,
            logit,
        }
    }

    /// Back-propagates `dlogit` through the scorer and span projection.
    /// Returns the gradient with respect to `h_q`.
    pub(crate) fn score_backward(
        &self,
        trace: &ScoreTrace,
        span_features: &[f64],
        dlogit: f64,
        grad: &mut AnsFindModel,
    ) -> Vec<f64> {
        let d = self.dim;
        let dhidden2: Vec<f64> = self.out.data.iter().map(|v| v * dlogit).collect();
        grad.out
            .data
            .iter_mut()
            .zip(&trace.hidden2)
            .for_each(|(g, h)| *g += dlogit * h);
        grad.ff2_w.outer_acc(&dhidden2, &trace.act1);
        grad.ff2_b.add_acc(&dhidden2);
        let mut dact1 = vec![0.0; self.hidden];
        self.ff2_w.matvec_t_acc(&dhidden2, &mut dact1);
        let dpre1: Vec<f64> = dact1
            .iter()
            .zip(&trace.pre1)
            .map(|(g, &p)| if p > 0.0 { *g } else { 0.0 })
            .collect();
        grad.ff1_w.outer_acc(&dpre1, &trace.x);
        grad.ff1_b.add_acc(&dpre1);
        let mut dx = vec![0.0; 5 * d];
        self.ff1_w.matvec_t_acc(&dpre1, &mut dx);
        let h_q = &trace.x[..d];
        let h_i = &trace.x[d..2 * d];
        let mut dh_q = vec![0.0; d];
        let mut dh_i = vec![0.0; d];
        for j in 0..d {
            dh_q[j] = dx[j] + dx[2 * d + j] * h_i[j];
            dh_i[j] = dx[d + j] + dx[2 * d + j] * h_q[j];
        }
        grad.proj_w.outer_acc(&dh_i, span_features);
        grad.proj_b.add_acc(&dh_i);
        dh_q
    }

    pub fn to_model_file(&self) -> ModelFile {
        let mut m = ModelFile::new(MODEL_KIND);
        m.push("threshold", &Tensor::from_vec(1, 1, vec![self.threshold]));
        for (name, p) in Self::PARAM_NAMES.iter().zip(self.params()) {
            m.push(name, p);
        }
        m
    }

    pub fn from_model_file(mut m: ModelFile) -> Result<Self, ModelIoError> {
        m.expect_kind(MODEL_KIND)?;
        let (dim, _) = m.shape_of("gru.w_z").ok_or_else(|| ModelIoError::Shape {
            name: "gru.w_z".into(),
            message: "missing".into(),
        })?;
        let (hidden, _) = m.shape_of("ff1.w").ok_or_else(|| ModelIoError::Shape {
            name: "ff1.w".into(),
            message: "missing".into(),
        })?;
        let threshold = m.take("threshold", 1, 1)?.data[0];
        if !(threshold > 0.0 && threshold < 1.0) {
            return Err(ModelIoError::Shape {
                name: "threshold".into(),
                message: format!("{threshold} outside (0, 1)"),
            });
        }
        let mut model = Self::zeros(dim, hidden);
        model.threshold = threshold;
        for (name, p) in Self::PARAM_NAMES.iter().zip(model.params_mut()) {
            *p = m.take(name, p.rows, p.cols)?;
        }
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ModelIoError> {
        self.to_model_file().save(path)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ModelIoError> {
        Self::from_model_file(ModelFile::load(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn model_file_round_trip() {
        let m = AnsFindModel::init(3, 4, 0.05, 9);
        let bytes = m.to_model_file().to_bytes();
        let back = AnsFindModel::from_model_file(ModelFile::from_bytes(&bytes).unwrap()).unwrap();
        assert_eq!(m, back);
        assert_eq!(back.to_model_file().to_bytes(), bytes);
    }

    #[test]
    fn wrong_kind_rejected() {
        let mut f = AnsFindModel::zeros(2, 2).to_model_file();
        f.kind = "bow".into();
        assert!(matches!(
            AnsFindModel::from_model_file(f),
            Err(ModelIoError::Kind { .. })
        ));
    }

    #[test]
    fn single_gru_step_matches_hand_recurrence() {
        // dim 1, every weight 0.5, biases 0; x = 1, h0 = 0
        let mut m = AnsFindModel::zeros(1, 1);
        for p in [&mut m.w_z, &mut m.u_z, &mut m.w_r, &mut m.u_r, &mut m.w_n, &mut m.u_n] {
            p.data[0] = 0.5;
        }
        let z = 1.0 / (1.0 + (-0.5f64).exp());
        let n = 0.5f64.tanh();
        let h1 = (1.0 - z) * n;
        assert!((m.encode(&[vec![1.0]])[0] - h1).abs() < 1e-15);
        // second step with x = -2
        let z2 = sigmoid(-1.0 + 0.5 * h1);
        let r2 = sigmoid(-1.0 + 0.5 * h1);
        let n2 = (-1.0 + 0.5 * r2 * h1).tanh();
        let h2 = (1.0 - z2) * n2 + z2 * h1;
        assert!((m.encode(&[vec![1.0], vec![-2.0]])[0] - h2).abs() < 1e-15);
    }
}
