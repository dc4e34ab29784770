use serde::{Deserialize, Serialize};

use super::matrix::{gemm, DenseMatrix, Transpose};
use crate::error::{Error, Result};
use crate::rng::Rng;

const SQRT_2_OVER_PI: f64 = 0.797_884_560_802_865_4;
const GELU_CUBIC: f64 = 0.044_715;

/// Fully connected layer `y = W x + b` with `W` stored `out × in`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffineParams {
    pub weight: DenseMatrix,
    pub bias: Vec<f64>,
}

impl AffineParams {
    pub fn zeros(input: usize, output: usize) -> Self {
        Self {
            weight: DenseMatrix::zeros(output, input),
            bias: vec![0.0; output],
        }
    }

    /// Glorot-uniform weights, zero bias.
    pub fn xavier(input: usize, output: usize, rng: &mut Rng) -> Self {
        let limit = (6.0 / (input + output) as f64).sqrt();
        let weight = DenseMatrix::from_fn(output, input, |_, _| rng.uniform(-limit, limit));
        Self {
            weight,
            bias: vec![0.0; output],
        }
    }

    pub fn input_dim(&self) -> usize {
        self.weight.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.weight.rows()
    }

    pub fn check(&self) -> Result<()> {
        if self.bias.len() != self.weight.rows() {
            return Err(Error::contract(format!(
                "bias length {} != weight rows {}",
                self.bias.len(),
                self.weight.rows()
            )));
        }
        Ok(())
    }

    /// Row-wise application: `X Wᵀ + 1 bᵀ` for an `n × in` batch.
    pub fn forward_rows(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        if x.cols() != self.input_dim() {
            return Err(Error::contract(format!(
                "affine input width {} != {}",
                x.cols(),
                self.input_dim()
            )));
        }
        let mut y = DenseMatrix::zeros(x.rows(), self.output_dim());
        gemm(1.0, x, Transpose::No, &self.weight, Transpose::Yes, 0.0, &mut y);
        y.add_row_vector(&self.bias);
        Ok(y)
    }

    /// Accumulates the parameter gradient of a row-wise application given
    /// upstream `dy` (`n × out`) and the layer input `x` (`n × in`).
    pub fn accumulate_rows_grad(&mut self, dy: &DenseMatrix, x: &DenseMatrix) {
        gemm(1.0, dy, Transpose::Yes, x, Transpose::No, 1.0, &mut self.weight);
        for (b, s) in self.bias.iter_mut().zip(dy.column_sums()) {
            *b += s;
        }
    }

    /// `self += alpha * other`
    pub fn add_scaled(&mut self, alpha: f64, other: &AffineParams) {
        self.weight.add_scaled(alpha, &other.weight);
        for (a, b) in self.bias.iter_mut().zip(&other.bias) {
            *a += alpha * b;
        }
    }

    /// Accumulates the gradient of a single-vector application.
    pub fn accumulate_vec_grad(&mut self, dy: &[f64], x: &[f64]) {
        self.weight.add_outer(1.0, dy, x);
        for (b, d) in self.bias.iter_mut().zip(dy) {
            *b += d;
        }
    }
}

pub fn affine(x: &[f64], p: &AffineParams) -> Result<Vec<f64>> {
    p.check()?;
    if x.len() != p.input_dim() {
        return Err(Error::contract(format!(
            "affine input length {} != {}",
            x.len(),
            p.input_dim()
        )));
    }
    let mut y = p.weight.mul_vec(x);
    for (v, b) in y.iter_mut().zip(&p.bias) {
        *v += b;
    }
    Ok(y)
}

/// Tanh-approximated GELU.
#[inline]
pub fn gelu(x: f64) -> f64 {
    let inner = SQRT_2_OVER_PI * (x + GELU_CUBIC * x * x * x);
    0.5 * x * (1.0 + inner.tanh())
}

/// Derivative of [`gelu`].
#[inline]
pub fn gelu_grad(x: f64) -> f64 {
    let inner = SQRT_2_OVER_PI * (x + GELU_CUBIC * x * x * x);
    let t = inner.tanh();
    let dinner = SQRT_2_OVER_PI * (1.0 + 3.0 * GELU_CUBIC * x * x);
    0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * dinner
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn check_finite_nonempty(v: &[f64]) -> Result<()> {
    if v.is_empty() {
        return Err(Error::contract("softmax of an empty vector"));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::contract("softmax input is not finite"));
    }
    Ok(())
}

/// Index of the largest entry; the lowest index wins ties.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

pub fn softmax(v: &[f64]) -> Result<Vec<f64>> {
    check_finite_nonempty(v)?;
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = v.iter().map(|x| (x - max).exp()).collect();
    let total: f64 = out.iter().sum();
    out.iter_mut().for_each(|x| *x /= total);
    Ok(out)
}

pub fn log_softmax(v: &[f64]) -> Result<Vec<f64>> {
    check_finite_nonempty(v)?;
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + v.iter().map(|x| (x - max).exp()).sum::<f64>().ln();
    Ok(v.iter().map(|x| x - lse).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Train,
    Eval,
}

/// Per-entry multipliers: 0 for dropped entries, `1/(1-rate)` for survivors.
pub type DropoutMask = Option<Vec<f64>>;

pub fn dropout_mask(len: usize, rate: f64, mode: Mode, rng: &mut Rng) -> Result<DropoutMask> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::contract(format!("dropout rate {rate} outside [0, 1)")));
    }
    if mode == Mode::Eval || rate == 0.0 {
        return Ok(None);
    }
    let scale = 1.0 / (1.0 - rate);
    Ok(Some(
        (0..len)
            .map(|_| if rng.next_f64() < rate { 0.0 } else { scale })
            .collect(),
    ))
}

pub fn apply_mask(values: &mut [f64], mask: &DropoutMask) {
    if let Some(m) = mask {
        for (v, k) in values.iter_mut().zip(m) {
            *v *= k;
        }
    }
}

/// Inverted dropout.
pub fn dropout(v: &[f64], rate: f64, mode: Mode, rng: &mut Rng) -> Result<Vec<f64>> {
    let mask = dropout_mask(v.len(), rate, mode, rng)?;
    let mut out = v.to_vec();
    apply_mask(&mut out, &mask);
    Ok(out)
}
