//! Single-branch clustering-constrained attention MIL with a GELU encoder,
//! widened gated attention and a two-layer classifier.

use serde::{Deserialize, Serialize};

use super::attention::{
    attention_pool, attention_pool_backward, gated_attention_backward, gated_attention_forward,
    GatedAttentionParams, GatedCache,
};
use super::params::{join, ParamTensors, TensorView};
use crate::error::{Error, Result};
use crate::nn::matrix::{gemm, Transpose};
use crate::nn::ops::{apply_mask, dropout_mask, DropoutMask};
use crate::nn::{
    focal_loss, gelu, gelu_grad, smooth_labels, softmax, weighted_cross_entropy, AffineParams,
    DenseMatrix, FocalLossConfig, Mode,
};
use crate::rng::Rng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClamConfig {
    pub feat_dim: usize,
    pub embed_dim: usize,
    pub attention_hidden: usize,
    pub classifier_hidden: usize,
    pub n_classes: usize,
    pub dropout: f64,
}

impl Default for ClamConfig {
    fn default() -> Self {
        Self {
            feat_dim: 1024,
            embed_dim: 512,
            attention_hidden: 384,
            classifier_hidden: 256,
            n_classes: 3,
            dropout: 0.4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClamSBParams {
    pub encoder: AffineParams,
    pub attention: GatedAttentionParams,
    pub classifier_hidden: AffineParams,
    pub classifier_out: AffineParams,
    /// One binary instance classifier per bag class.
    pub instance_heads: Vec<AffineParams>,
    pub dropout_rate: f64,
}

impl ClamSBParams {
    /// Glorot weights and zero biases; the output layer starts at zero so an
    /// untrained model predicts uniform class probabilities.
    pub fn init(cfg: &ClamConfig, rng: &mut Rng) -> Self {
        let encoder = AffineParams::xavier(cfg.feat_dim, cfg.embed_dim, rng);
        let attention = GatedAttentionParams::init(cfg.embed_dim, cfg.attention_hidden, 1, rng);
        let classifier_hidden = AffineParams::xavier(cfg.embed_dim, cfg.classifier_hidden, rng);
        let classifier_out = AffineParams::zeros(cfg.classifier_hidden, cfg.n_classes);
        let instance_heads = (0..cfg.n_classes)
            .map(|_| AffineParams::xavier(cfg.embed_dim, 2, rng))
            .collect();
        Self {
            encoder,
            attention,
            classifier_hidden,
            classifier_out,
            instance_heads,
            dropout_rate: cfg.dropout,
        }
    }

    pub fn config(&self) -> ClamConfig {
        ClamConfig {
            feat_dim: self.encoder.input_dim(),
            embed_dim: self.encoder.output_dim(),
            attention_hidden: self.attention.hidden_dim(),
            classifier_hidden: self.classifier_hidden.output_dim(),
            n_classes: self.classifier_out.output_dim(),
            dropout: self.dropout_rate,
        }
    }

    pub fn n_classes(&self) -> usize {
        self.classifier_out.output_dim()
    }
}

impl ParamTensors for ClamSBParams {
    fn tensors<'a>(&'a self, prefix: &str, out: &mut Vec<TensorView<'a>>) {
        self.encoder.tensors(&join(prefix, "encoder"), out);
        self.attention.tensors(&join(prefix, "attention"), out);
        self.classifier_hidden.tensors(&join(prefix, "classifier_hidden"), out);
        self.classifier_out.tensors(&join(prefix, "classifier_out"), out);
        self.instance_heads.tensors(&join(prefix, "instance_heads"), out);
    }

    fn tensors_mut<'a>(&'a mut self, out: &mut Vec<&'a mut [f64]>) {
        self.encoder.tensors_mut(out);
        self.attention.tensors_mut(out);
        self.classifier_hidden.tensors_mut(out);
        self.classifier_out.tensors_mut(out);
        self.instance_heads.tensors_mut(out);
    }

    fn zeros_like(&self) -> Self {
        Self {
            encoder: self.encoder.zeros_like(),
            attention: self.attention.zeros_like(),
            classifier_hidden: self.classifier_hidden.zeros_like(),
            classifier_out: self.classifier_out.zeros_like(),
            instance_heads: self.instance_heads.zeros_like(),
            dropout_rate: self.dropout_rate,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ClamCache {
    encoded_pre: DenseMatrix,
    /// Encoder output after GELU and dropout; the instances that get pooled.
    pub encoded: DenseMatrix,
    encoder_mask: DropoutMask,
    gated: GatedCache,
    hidden_pre: Vec<f64>,
    hidden: Vec<f64>,
    hidden_mask: DropoutMask,
}

#[derive(Clone, Debug)]
pub struct ClamForward {
    pub logits: Vec<f64>,
    /// Pooled `embed_dim` slide vector `S = Σ aᵢ hᵢ`.
    pub embedding: Vec<f64>,
    pub attention: Vec<f64>,
    pub cache: ClamCache,
}

pub fn clam_sb_forward(
    bag: &DenseMatrix,
    p: &ClamSBParams,
    mode: Mode,
    rng: &mut Rng,
) -> Result<ClamForward> {
    if bag.rows() == 0 {
        return Err(Error::contract("empty bag"));
    }
    if bag.cols() != p.encoder.input_dim() {
        return Err(Error::contract(format!(
            "bag feature width {} != model feat_dim {}",
            bag.cols(),
            p.encoder.input_dim()
        )));
    }
    let encoded_pre = p.encoder.forward_rows(bag)?;
    let mut encoded = encoded_pre.map(gelu);
    let encoder_mask = dropout_mask(encoded.data().len(), p.dropout_rate, mode, rng)?;
    apply_mask(encoded.data_mut(), &encoder_mask);

    let (scores, gated) = gated_attention_forward(&encoded, &p.attention)?;
    let pooled = attention_pool(&encoded, &scores.column(0))?;

    let hidden_pre = crate::nn::affine(&pooled.embedding, &p.classifier_hidden)?;
    let mut hidden: Vec<f64> = hidden_pre.iter().map(|&v| gelu(v)).collect();
    let hidden_mask = dropout_mask(hidden.len(), p.dropout_rate, mode, rng)?;
    apply_mask(&mut hidden, &hidden_mask);
    let logits = crate::nn::affine(&hidden, &p.classifier_out)?;
    if logits.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite CLAM logits".into()));
    }
    Ok(ClamForward {
        logits,
        embedding: pooled.embedding,
        attention: pooled.weights,
        cache: ClamCache {
            encoded_pre,
            encoded,
            encoder_mask,
            gated,
            hidden_pre,
            hidden,
            hidden_mask,
        },
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClamLossConfig {
    pub focal: FocalLossConfig,
    /// Weight of the bag loss; the instance loss gets `1 - bag_weight`.
    pub bag_weight: f64,
    /// Number of top and bottom attended instances pseudo-labelled per bag.
    pub b: usize,
}

impl Default for ClamLossConfig {
    fn default() -> Self {
        Self {
            focal: FocalLossConfig::default(),
            bag_weight: 0.5,
            b: 8,
        }
    }
}

#[derive(Clone, Debug)]
pub struct InstanceLoss {
    pub loss: f64,
    /// `(instance index, pseudo label)`; label 1 for the top-attended set.
    pub selected: Vec<(usize, usize)>,
    pub head_grad: AffineParams,
    pub d_encoded: DenseMatrix,
}

/// Indices ordered by decreasing attention; ties keep the lower index first.
fn rank_by_attention(attention: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..attention.len()).collect();
    idx.sort_by(|&a, &b| attention[b].total_cmp(&attention[a]).then(a.cmp(&b)));
    idx
}

/// Binary cross-entropy under `instance_heads[bag_class]` on the `B'` most
/// attended instances (label 1) and the `B'` least attended (label 0), with
/// `B' = min(B, n/2)`; averaged over the `2B'` instances. Bags with fewer than
/// two instances contribute zero loss.
pub fn clam_instance_loss(
    attention: &[f64],
    encoded: &DenseMatrix,
    bag_class: usize,
    p: &ClamSBParams,
    b: usize,
) -> Result<InstanceLoss> {
    let n = encoded.rows();
    if attention.len() != n {
        return Err(Error::contract("attention length != instance count"));
    }
    let head = p
        .instance_heads
        .get(bag_class)
        .ok_or_else(|| Error::contract(format!("no instance head for class {bag_class}")))?;
    let mut out = InstanceLoss {
        loss: 0.0,
        selected: Vec::new(),
        head_grad: head.zeros_like(),
        d_encoded: DenseMatrix::zeros(n, encoded.cols()),
    };
    let k = b.min(n / 2);
    if k == 0 {
        return Ok(out);
    }
    let ranked = rank_by_attention(attention);
    out.selected.extend(ranked[..k].iter().map(|&i| (i, 1)));
    out.selected.extend(ranked[n - k..].iter().map(|&i| (i, 0)));

    let scale = 1.0 / (2 * k) as f64;
    let unit = [1.0, 1.0];
    for &(i, label) in &out.selected {
        let x = encoded.row(i);
        let z = crate::nn::affine(x, head)?;
        let ce = weighted_cross_entropy(&z, label, &unit)?;
        out.loss += scale * ce.loss;
        let dz: Vec<f64> = ce.grad_logits.iter().map(|g| g * scale).collect();
        out.head_grad.accumulate_vec_grad(&dz, x);
        let dx = head.weight.mul_vec_transposed(&dz);
        for (d, v) in out.d_encoded.row_mut(i).iter_mut().zip(dx) {
            *d += v;
        }
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct ClamLoss {
    pub total: f64,
    pub bag: f64,
    pub instance: f64,
    pub grads: ClamSBParams,
}

/// Total loss `w·bag + (1-w)·instance` and its exact gradient.
pub fn clam_loss_and_grad(
    p: &ClamSBParams,
    bag: &DenseMatrix,
    label: usize,
    cfg: &ClamLossConfig,
    fwd: &ClamForward,
) -> Result<ClamLoss> {
    let c = &fwd.cache;
    if c.encoded.rows() != bag.rows() || fwd.attention.len() != bag.rows() {
        return Err(Error::contract("forward cache does not match bag"));
    }
    let target = smooth_labels(label, cfg.focal.smoothing_eps, p.n_classes())?;
    let bag_loss = focal_loss(&fwd.logits, &target, label, &cfg.focal)?;
    let inst = clam_instance_loss(&fwd.attention, &c.encoded, label, p, cfg.b)?;
    let w = cfg.bag_weight;
    let mut g = p.zeros_like();

    let dlogits: Vec<f64> = bag_loss.grad_logits.iter().map(|v| v * w).collect();
    g.classifier_out.accumulate_vec_grad(&dlogits, &c.hidden);
    let mut dhidden = p.classifier_out.weight.mul_vec_transposed(&dlogits);
    apply_mask(&mut dhidden, &c.hidden_mask);
    for (d, &z) in dhidden.iter_mut().zip(&c.hidden_pre) {
        *d *= gelu_grad(z);
    }
    g.classifier_hidden.accumulate_vec_grad(&dhidden, &fwd.embedding);
    let d_embedding = p.classifier_hidden.weight.mul_vec_transposed(&dhidden);

    let mut d_encoded = DenseMatrix::zeros(bag.rows(), c.encoded.cols());
    let dscores =
        attention_pool_backward(&c.encoded, &fwd.attention, &d_embedding, Some(&mut d_encoded));
    let dscores = DenseMatrix::from_vec(bag.rows(), 1, dscores)?;
    gated_attention_backward(
        &c.encoded,
        &p.attention,
        &c.gated,
        &dscores,
        &mut g.attention,
        Some(&mut d_encoded),
    );

    let iw = 1.0 - w;
    if iw != 0.0 && !inst.selected.is_empty() {
        g.instance_heads[label].add_scaled(iw, &inst.head_grad);
        d_encoded.add_scaled(iw, &inst.d_encoded);
    }

    if let Some(mask) = &c.encoder_mask {
        for (d, m) in d_encoded.data_mut().iter_mut().zip(mask) {
            *d *= m;
        }
    }
    for (d, &z) in d_encoded.data_mut().iter_mut().zip(c.encoded_pre.data()) {
        *d *= gelu_grad(z);
    }
    g.encoder.weight.fill(0.0);
    gemm(1.0, &d_encoded, Transpose::Yes, bag, Transpose::No, 0.0, &mut g.encoder.weight);
    g.encoder.bias = d_encoded.column_sums();

    Ok(ClamLoss {
        total: w * bag_loss.loss + iw * inst.loss,
        bag: bag_loss.loss,
        instance: inst.loss,
        grads: g,
    })
}

pub fn clam_probabilities(fwd: &ClamForward) -> Result<Vec<f64>> {
    softmax(&fwd.logits)
}
