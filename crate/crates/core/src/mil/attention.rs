//! Gated attention scoring and attention-weighted pooling.

use serde::{Deserialize, Serialize};

use super::params::{join, ParamTensors, TensorView};
use crate::error::{Error, Result};
use crate::nn::matrix::{gemm, Transpose};
use crate::nn::{sigmoid, softmax, AffineParams, DenseMatrix};
use crate::rng::Rng;

/// `g = tanh(Wa h + ba) ⊙ sigmoid(Wb h + bb)`, then `score = Wscore g + bscore`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GatedAttentionParams {
    pub feature: AffineParams,
    pub gate: AffineParams,
    pub score: AffineParams,
}

impl GatedAttentionParams {
    pub fn init(input: usize, hidden: usize, score_out: usize, rng: &mut Rng) -> Self {
        Self {
            feature: AffineParams::xavier(input, hidden, rng),
            gate: AffineParams::xavier(input, hidden, rng),
            score: AffineParams::xavier(hidden, score_out, rng),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.feature.input_dim()
    }

    pub fn hidden_dim(&self) -> usize {
        self.feature.output_dim()
    }

    pub fn score_dim(&self) -> usize {
        self.score.output_dim()
    }

    fn check(&self) -> Result<()> {
        self.feature.check()?;
        self.gate.check()?;
        self.score.check()?;
        if self.feature.weight.shape() != self.gate.weight.shape() {
            return Err(Error::contract("gated attention branches differ in shape"));
        }
        if self.score.input_dim() != self.hidden_dim() {
            return Err(Error::contract("score map width != attention hidden size"));
        }
        Ok(())
    }
}

impl ParamTensors for GatedAttentionParams {
    fn tensors<'a>(&'a self, prefix: &str, out: &mut Vec<TensorView<'a>>) {
        self.feature.tensors(&join(prefix, "feature"), out);
        self.gate.tensors(&join(prefix, "gate"), out);
        self.score.tensors(&join(prefix, "score"), out);
    }

    fn tensors_mut<'a>(&'a mut self, out: &mut Vec<&'a mut [f64]>) {
        self.feature.tensors_mut(out);
        self.gate.tensors_mut(out);
        self.score.tensors_mut(out);
    }

    fn zeros_like(&self) -> Self {
        Self {
            feature: self.feature.zeros_like(),
            gate: self.gate.zeros_like(),
            score: self.score.zeros_like(),
        }
    }
}

/// Activations retained for the backward pass.
#[derive(Clone, Debug)]
pub struct GatedCache {
    tanh: DenseMatrix,
    gate: DenseMatrix,
    gated: DenseMatrix,
}

pub fn gated_attention_forward(
    h: &DenseMatrix,
    p: &GatedAttentionParams,
) -> Result<(DenseMatrix, GatedCache)> {
    p.check()?;
    if h.rows() == 0 {
        return Err(Error::contract("gated attention on an empty bag"));
    }
    let tanh = p.feature.forward_rows(h)?.map(f64::tanh);
    let gate = p.gate.forward_rows(h)?.map(sigmoid);
    let mut gated = tanh.clone();
    for (g, s) in gated.data_mut().iter_mut().zip(gate.data()) {
        *g *= s;
    }
    let scores = p.score.forward_rows(&gated)?;
    Ok((scores, GatedCache { tanh, gate, gated }))
}

/// Raw per-instance scores, `n × score_out`.
pub fn gated_attention_scores(h: &DenseMatrix, p: &GatedAttentionParams) -> Result<DenseMatrix> {
    gated_attention_forward(h, p).map(|(s, _)| s)
}

/// Accumulates parameter gradients into `grads` given `dscores` (`n × score_out`);
/// if `dh` is supplied the input gradient is accumulated into it.
pub fn gated_attention_backward(
    h: &DenseMatrix,
    p: &GatedAttentionParams,
    cache: &GatedCache,
    dscores: &DenseMatrix,
    grads: &mut GatedAttentionParams,
    dh: Option<&mut DenseMatrix>,
) {
    grads.score.accumulate_rows_grad(dscores, &cache.gated);
    let mut dgated = DenseMatrix::zeros(h.rows(), p.hidden_dim());
    gemm(1.0, dscores, Transpose::No, &p.score.weight, Transpose::No, 0.0, &mut dgated);

    let mut dfeat = dgated.clone();
    let mut dgate = dgated;
    for i in 0..dfeat.data().len() {
        let t = cache.tanh.data()[i];
        let s = cache.gate.data()[i];
        dfeat.data_mut()[i] *= s * (1.0 - t * t);
        dgate.data_mut()[i] *= t * s * (1.0 - s);
    }
    grads.feature.accumulate_rows_grad(&dfeat, h);
    grads.gate.accumulate_rows_grad(&dgate, h);
    if let Some(dh) = dh {
        gemm(1.0, &dfeat, Transpose::No, &p.feature.weight, Transpose::No, 1.0, dh);
        gemm(1.0, &dgate, Transpose::No, &p.gate.weight, Transpose::No, 1.0, dh);
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Pooled {
    pub weights: Vec<f64>,
    pub embedding: Vec<f64>,
}

/// `a = softmax(scores)`, `S = Σ aᵢ hᵢ`.
pub fn attention_pool(h: &DenseMatrix, raw_scores: &[f64]) -> Result<Pooled> {
    if h.rows() == 0 || raw_scores.is_empty() {
        return Err(Error::contract("attention pooling over an empty bag"));
    }
    if raw_scores.len() != h.rows() {
        return Err(Error::contract(format!(
            "{} scores for {} instances",
            raw_scores.len(),
            h.rows()
        )));
    }
    let weights = softmax(raw_scores)?;
    let embedding = h.mul_vec_transposed(&weights);
    Ok(Pooled { weights, embedding })
}

/// Given `dS`, returns `(d raw_scores, accumulates dh)` for [`attention_pool`].
pub(crate) fn attention_pool_backward(
    h: &DenseMatrix,
    weights: &[f64],
    d_embedding: &[f64],
    dh: Option<&mut DenseMatrix>,
) -> Vec<f64> {
    let da = h.mul_vec(d_embedding);
    if let Some(dh) = dh {
        dh.add_outer(1.0, weights, d_embedding);
    }
    softmax_backward(weights, &da)
}

/// Vector-Jacobian product of softmax: `a ⊙ (g − ⟨a, g⟩)`.
pub(crate) fn softmax_backward(a: &[f64], g: &[f64]) -> Vec<f64> {
    let inner: f64 = a.iter().zip(g).map(|(x, y)| x * y).sum();
    a.iter().zip(g).map(|(x, y)| x * (y - inner)).collect()
}
