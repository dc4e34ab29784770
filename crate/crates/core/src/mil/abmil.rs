//! Gated multi-head attention MIL with class-specific attention and bag vectors.
//!
//! Every head scores each instance once per class; raw scores are averaged over
//! heads, softmaxed over instances per class, and used to pool the original
//! instance features into one bag vector per class. A shared bottleneck maps
//! each class vector to a hidden code and a per-class scorer produces that
//! class's logit.

use serde::{Deserialize, Serialize};

use super::attention::{
    gated_attention_backward, gated_attention_forward, softmax_backward, GatedAttentionParams,
    GatedCache,
};
use super::params::{join, ParamTensors, TensorView};
use crate::error::{Error, Result};
use crate::nn::ops::{apply_mask, dropout_mask, DropoutMask};
use crate::nn::{affine, gelu, gelu_grad, softmax, weighted_cross_entropy, AffineParams, DenseMatrix, Mode};
use crate::rng::Rng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AbmilConfig {
    pub feat_dim: usize,
    pub n_heads: usize,
    pub head_hidden: usize,
    pub bottleneck_dim: usize,
    pub n_classes: usize,
    pub dropout: f64,
}

impl Default for AbmilConfig {
    fn default() -> Self {
        Self {
            feat_dim: 768,
            n_heads: 8,
            head_hidden: 256,
            bottleneck_dim: 512,
            n_classes: 3,
            dropout: 0.4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AbmilParams {
    pub heads: Vec<GatedAttentionParams>,
    pub bottleneck: AffineParams,
    pub class_scorers: Vec<AffineParams>,
    pub dropout_rate: f64,
}

impl AbmilParams {
    pub fn init(cfg: &AbmilConfig, rng: &mut Rng) -> Self {
        let heads = (0..cfg.n_heads)
            .map(|_| GatedAttentionParams::init(cfg.feat_dim, cfg.head_hidden, cfg.n_classes, rng))
            .collect();
        let bottleneck = AffineParams::xavier(cfg.feat_dim, cfg.bottleneck_dim, rng);
        let class_scorers = (0..cfg.n_classes)
            .map(|_| AffineParams::zeros(cfg.bottleneck_dim, 1))
            .collect();
        Self {
            heads,
            bottleneck,
            class_scorers,
            dropout_rate: cfg.dropout,
        }
    }

    pub fn config(&self) -> AbmilConfig {
        AbmilConfig {
            feat_dim: self.bottleneck.input_dim(),
            n_heads: self.heads.len(),
            head_hidden: self.heads.first().map_or(0, GatedAttentionParams::hidden_dim),
            bottleneck_dim: self.bottleneck.output_dim(),
            n_classes: self.class_scorers.len(),
            dropout: self.dropout_rate,
        }
    }

    pub fn n_classes(&self) -> usize {
        self.class_scorers.len()
    }
}

impl ParamTensors for AbmilParams {
    fn tensors<'a>(&'a self, prefix: &str, out: &mut Vec<TensorView<'a>>) {
        self.heads.tensors(&join(prefix, "heads"), out);
        self.bottleneck.tensors(&join(prefix, "bottleneck"), out);
        self.class_scorers.tensors(&join(prefix, "class_scorers"), out);
    }

    fn tensors_mut<'a>(&'a mut self, out: &mut Vec<&'a mut [f64]>) {
        self.heads.tensors_mut(out);
        self.bottleneck.tensors_mut(out);
        self.class_scorers.tensors_mut(out);
    }

    fn zeros_like(&self) -> Self {
        Self {
            heads: self.heads.zeros_like(),
            bottleneck: self.bottleneck.zeros_like(),
            class_scorers: self.class_scorers.zeros_like(),
            dropout_rate: self.dropout_rate,
        }
    }
}

#[derive(Clone, Debug)]
pub struct AbmilCache {
    heads: Vec<GatedCache>,
    code_pre: Vec<Vec<f64>>,
    code: Vec<Vec<f64>>,
    code_masks: Vec<DropoutMask>,
}

#[derive(Clone, Debug)]
pub struct AbmilForward {
    pub logits: Vec<f64>,
    /// One pooled `feat_dim` vector per class.
    pub bag_vectors: Vec<Vec<f64>>,
    /// `n_classes × n`, each row a softmax over instances.
    pub attention: DenseMatrix,
    pub cache: AbmilCache,
}

pub fn abmil_forward(
    bag: &DenseMatrix,
    p: &AbmilParams,
    mode: Mode,
    rng: &mut Rng,
) -> Result<AbmilForward> {
    let n = bag.rows();
    if n == 0 {
        return Err(Error::contract("empty bag"));
    }
    if p.heads.is_empty() {
        return Err(Error::contract("ABMIL needs at least one attention head"));
    }
    if bag.cols() != p.bottleneck.input_dim() {
        return Err(Error::contract(format!(
            "bag feature width {} != model feat_dim {}",
            bag.cols(),
            p.bottleneck.input_dim()
        )));
    }
    let k = p.n_classes();
    let mut mean_scores = DenseMatrix::zeros(n, k);
    let mut head_caches = Vec::with_capacity(p.heads.len());
    let inv_heads = 1.0 / p.heads.len() as f64;
    for head in &p.heads {
        if head.score_dim() != k {
            return Err(Error::contract("head score width != class count"));
        }
        let (scores, cache) = gated_attention_forward(bag, head)?;
        mean_scores.add_scaled(inv_heads, &scores);
        head_caches.push(cache);
    }

    let mut attention = DenseMatrix::zeros(k, n);
    let mut bag_vectors = Vec::with_capacity(k);
    let mut code_pre = Vec::with_capacity(k);
    let mut code = Vec::with_capacity(k);
    let mut code_masks = Vec::with_capacity(k);
    let mut logits = Vec::with_capacity(k);
    for c in 0..k {
        let a = softmax(&mean_scores.column(c))?;
        let s = bag.mul_vec_transposed(&a);
        attention.row_mut(c).copy_from_slice(&a);
        let z_pre = affine(&s, &p.bottleneck)?;
        let mut z: Vec<f64> = z_pre.iter().map(|&v| gelu(v)).collect();
        let mask = dropout_mask(z.len(), p.dropout_rate, mode, rng)?;
        apply_mask(&mut z, &mask);
        logits.push(affine(&z, &p.class_scorers[c])?[0]);
        bag_vectors.push(s);
        code_pre.push(z_pre);
        code.push(z);
        code_masks.push(mask);
    }
    if logits.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite ABMIL logits".into()));
    }
    Ok(AbmilForward {
        logits,
        bag_vectors,
        attention,
        cache: AbmilCache {
            heads: head_caches,
            code_pre,
            code,
            code_masks,
        },
    })
}

#[derive(Clone, Debug)]
pub struct AbmilLoss {
    pub total: f64,
    pub grads: AbmilParams,
}

/// Weighted cross-entropy on the bag logits and its exact gradient.
pub fn abmil_loss_and_grad(
    p: &AbmilParams,
    bag: &DenseMatrix,
    label: usize,
    class_weights: &[f64],
    fwd: &AbmilForward,
) -> Result<AbmilLoss> {
    let n = bag.rows();
    let k = p.n_classes();
    if fwd.attention.shape() != (k, n) || fwd.cache.heads.len() != p.heads.len() {
        return Err(Error::contract("forward cache does not match bag"));
    }
    let ce = weighted_cross_entropy(&fwd.logits, label, class_weights)?;
    let mut g = p.zeros_like();
    let mut dscores = DenseMatrix::zeros(n, k);
    let inv_heads = 1.0 / p.heads.len() as f64;
    for c in 0..k {
        let dl = ce.grad_logits[c];
        g.class_scorers[c].accumulate_vec_grad(&[dl], &fwd.cache.code[c]);
        let mut dz: Vec<f64> = p.class_scorers[c].weight.row(0).iter().map(|w| w * dl).collect();
        apply_mask(&mut dz, &fwd.cache.code_masks[c]);
        for (d, &z) in dz.iter_mut().zip(&fwd.cache.code_pre[c]) {
            *d *= gelu_grad(z);
        }
        g.bottleneck.accumulate_vec_grad(&dz, &fwd.bag_vectors[c]);
        let ds = p.bottleneck.weight.mul_vec_transposed(&dz);
        let da = bag.mul_vec(&ds);
        let dscore_c = softmax_backward(fwd.attention.row(c), &da);
        for (i, v) in dscore_c.into_iter().enumerate() {
            dscores.set(i, c, v * inv_heads);
        }
    }
    for ((head, cache), hg) in p.heads.iter().zip(&fwd.cache.heads).zip(g.heads.iter_mut()) {
        gated_attention_backward(bag, head, cache, &dscores, hg, None);
    }
    Ok(AbmilLoss {
        total: ce.loss,
        grads: g,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> AbmilConfig {
        AbmilConfig {
            feat_dim: 5,
            n_heads: 2,
            head_hidden: 4,
            bottleneck_dim: 6,
            n_classes: 3,
            dropout: 0.4,
        }
    }

    #[test]
    fn single_instance_bag() {
        let mut rng = Rng::new(1);
        let p = AbmilParams::init(&small(), &mut rng);
        let bag = DenseMatrix::from_rows(&[vec![0.5, -1.0, 2.0, 0.0, 3.0]]).unwrap();
        let f = abmil_forward(&bag, &p, Mode::Eval, &mut rng).unwrap();
        for c in 0..3 {
            assert_eq!(f.attention.row(c), &[1.0]);
            assert_eq!(f.bag_vectors[c], bag.row(0));
        }
    }

    #[test]
    fn zero_score_maps_give_bag_mean() {
        let mut rng = Rng::new(2);
        let mut p = AbmilParams::init(&small(), &mut rng);
        for h in &mut p.heads {
            h.score = AffineParams::zeros(4, 3);
        }
        let bag = DenseMatrix::from_fn(4, 5, |_, _| rng.gaussian());
        let mean: Vec<f64> = bag.column_sums().iter().map(|s| s / 4.0).collect();
        let f = abmil_forward(&bag, &p, Mode::Eval, &mut rng).unwrap();
        for c in 0..3 {
            assert!(f.attention.row(c).iter().all(|a| (a - 0.25).abs() < 1e-15));
            for (a, b) in f.bag_vectors[c].iter().zip(&mean) {
                assert!((a - b).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn attention_rows_normalised_and_bag_vectors_convex() {
        let mut rng = Rng::new(3);
        let p = AbmilParams::init(&small(), &mut rng);
        let bag = DenseMatrix::from_fn(9, 5, |_, _| 3.0 * rng.gaussian());
        let f = abmil_forward(&bag, &p, Mode::Train, &mut rng).unwrap();
        for c in 0..3 {
            assert!((f.attention.row(c).iter().sum::<f64>() - 1.0).abs() < 1e-10);
            for d in 0..5 {
                let col = bag.column(d);
                let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let v = f.bag_vectors[c][d];
                assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
            }
        }
    }

    #[test]
    fn untrained_logits_are_zero() {
        let mut rng = Rng::new(4);
        let p = AbmilParams::init(&small(), &mut rng);
        let bag = DenseMatrix::from_fn(3, 5, |_, _| rng.gaussian());
        let f = abmil_forward(&bag, &p, Mode::Eval, &mut rng).unwrap();
        assert_eq!(f.logits, vec![0.0; 3]);
    }
}
