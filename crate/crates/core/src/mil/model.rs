use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::abmil::{abmil_forward, abmil_loss_and_grad, AbmilConfig, AbmilForward, AbmilParams};
use super::clam::{
    clam_loss_and_grad, clam_sb_forward, ClamConfig, ClamForward, ClamLossConfig, ClamSBParams,
};
use super::params::ParamTensors;
use crate::error::{Error, Result};
use crate::nn::{argmax, softmax, DenseMatrix, Mode};
use crate::rng::Rng;

pub const MODEL_MAGIC: &[u8; 4] = b"PMD1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelKind {
    #[serde(rename = "clam-sb")]
    ClamSb,
    #[serde(rename = "abmil")]
    Abmil,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::ClamSb => "clam-sb",
            ModelKind::Abmil => "abmil",
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "clam-sb" | "clam" => Ok(ModelKind::ClamSb),
            "abmil" => Ok(ModelKind::Abmil),
            other => Err(Error::Config(format!("unknown model kind {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum MilModel {
    ClamSb(ClamSBParams),
    Abmil(AbmilParams),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum MilLossConfig {
    Clam(ClamLossConfig),
    /// Weighted cross-entropy with one weight per class.
    Abmil { class_weights: Vec<f64> },
}

#[derive(Clone, Debug)]
pub enum ForwardOutput {
    Clam(ClamForward),
    Abmil(AbmilForward),
}

impl ForwardOutput {
    pub fn logits(&self) -> &[f64] {
        match self {
            ForwardOutput::Clam(f) => &f.logits,
            ForwardOutput::Abmil(f) => &f.logits,
        }
    }

    pub fn probabilities(&self) -> Vec<f64> {
        softmax(self.logits()).expect("forward logits are finite and non-empty")
    }

    pub fn predicted_class(&self) -> usize {
        argmax(self.logits())
    }

    /// Attention weights over instances: CLAM's single branch, or the ABMIL
    /// row for `class` (predicted class when `None`).
    pub fn attention(&self, class: Option<usize>) -> Result<Vec<f64>> {
        match self {
            ForwardOutput::Clam(f) => {
                if let Some(c) = class {
                    if c >= f.logits.len() {
                        return Err(Error::contract(format!("class {c} out of range")));
                    }
                }
                Ok(f.attention.clone())
            }
            ForwardOutput::Abmil(f) => {
                let c = class.unwrap_or_else(|| argmax(&f.logits));
                if c >= f.attention.rows() {
                    return Err(Error::contract(format!("class {c} out of range")));
                }
                Ok(f.attention.row(c).to_vec())
            }
        }
    }

    /// Bag-level embedding used when concatenating slide vectors downstream:
    /// CLAM's pooled vector or the ABMIL vector for the predicted class.
    pub fn embedding(&self) -> Vec<f64> {
        match self {
            ForwardOutput::Clam(f) => f.embedding.clone(),
            ForwardOutput::Abmil(f) => f.bag_vectors[argmax(&f.logits)].clone(),
        }
    }
}


#[derive(Clone, Debug)]
pub struct LossAndGrad {
    pub loss: f64,
    pub grads: MilModel,
}

impl MilModel {
    pub fn kind(&self) -> ModelKind {
        match self {
            MilModel::ClamSb(_) => ModelKind::ClamSb,
            MilModel::Abmil(_) => ModelKind::Abmil,
        }
    }

    pub fn feat_dim(&self) -> usize {
        match self {
            MilModel::ClamSb(p) => p.encoder.input_dim(),
            MilModel::Abmil(p) => p.bottleneck.input_dim(),
        }
    }

    pub fn n_classes(&self) -> usize {
        match self {
            MilModel::ClamSb(p) => p.n_classes(),
            MilModel::Abmil(p) => p.n_classes(),
        }
    }

    pub fn config_value(&self) -> Value {
        match self {
            MilModel::ClamSb(p) => serde_json::to_value(p.config()),
            MilModel::Abmil(p) => serde_json::to_value(p.config()),
        }
        .expect("configs serialize")
    }

    pub fn forward(&self, bag: &DenseMatrix, mode: Mode, rng: &mut Rng) -> Result<ForwardOutput> {
        match self {
            MilModel::ClamSb(p) => clam_sb_forward(bag, p, mode, rng).map(ForwardOutput::Clam),
            MilModel::Abmil(p) => abmil_forward(bag, p, mode, rng).map(ForwardOutput::Abmil),
        }
    }

    /// Loss for `label` and the exact gradient of every parameter.
    pub fn backward(
        &self,
        bag: &DenseMatrix,
        label: usize,
        loss: &MilLossConfig,
        fwd: &ForwardOutput,
    ) -> Result<LossAndGrad> {
        match (self, loss, fwd) {
            (MilModel::ClamSb(p), MilLossConfig::Clam(cfg), ForwardOutput::Clam(f)) => {
                let l = clam_loss_and_grad(p, bag, label, cfg, f)?;
                Ok(LossAndGrad {
                    loss: l.total,
                    grads: MilModel::ClamSb(l.grads),
                })
            }
            (MilModel::Abmil(p), MilLossConfig::Abmil { class_weights }, ForwardOutput::Abmil(f)) => {
                let l = abmil_loss_and_grad(p, bag, label, class_weights, f)?;
                Ok(LossAndGrad {
                    loss: l.total,
                    grads: MilModel::Abmil(l.grads),
                })
            }
            _ => Err(Error::contract("model, loss config and forward cache kinds differ")),
        }
    }

    /// Forward then backward in one call.
    pub fn loss_and_grad(
        &self,
        bag: &DenseMatrix,
        label: usize,
        loss: &MilLossConfig,
        mode: Mode,
        rng: &mut Rng,
    ) -> Result<LossAndGrad> {
        let fwd = self.forward(bag, mode, rng)?;
        self.backward(bag, label, loss, &fwd)
    }

    /// Bag-level loss only (no instance term), used for validation.
    pub fn bag_loss(&self, fwd: &ForwardOutput, label: usize, loss: &MilLossConfig) -> Result<f64> {
        match (loss, fwd) {
            (MilLossConfig::Clam(cfg), ForwardOutput::Clam(f)) => {
                let t = crate::nn::smooth_labels(label, cfg.focal.smoothing_eps, f.logits.len())?;
                Ok(crate::nn::focal_loss(&f.logits, &t, label, &cfg.focal)?.loss)
            }
            (MilLossConfig::Abmil { class_weights }, ForwardOutput::Abmil(f)) => {
                Ok(crate::nn::weighted_cross_entropy(&f.logits, label, class_weights)?.loss)
            }
            _ => Err(Error::contract("loss config and forward kinds differ")),
        }
    }

    pub fn save_bytes(&self, hyperparameters: &Value, seed: u64) -> Vec<u8> {
        let views = self.views();
        let tensors: Vec<Value> = views
            .iter()
            .map(|v| serde_json::json!({"name": v.name, "rows": v.rows, "cols": v.cols}))
            .collect();
        let header = serde_json::json!({
            "kind": self.kind(),
            "config": self.config_value(),
            "hyperparameters": hyperparameters,
            "seed": seed,
            "tensors": tensors,
        });
        let header = serde_json::to_vec(&header).expect("header serializes");
        let mut out = Vec::with_capacity(8 + header.len() + 4 * self.parameter_count());
        out.extend_from_slice(MODEL_MAGIC);
        out.extend_from_slice(&(header.len() as u32).to_le_bytes());
        out.extend_from_slice(&header);
        for v in &views {
            for &x in v.data {
                out.extend_from_slice(&(x as f32).to_le_bytes());
            }
        }
        out
    }

    pub fn save(&self, path: &Path, hyperparameters: &Value, seed: u64) -> Result<()> {
        crate::io::write_atomic(path, &self.save_bytes(hyperparameters, seed))
    }

    pub fn load(path: &Path) -> Result<ModelFile> {
        let bytes = std::fs::read(path).map_err(|e| Error::file(path, e))?;
        ModelFile::from_bytes(&bytes)
    }
}

impl ParamTensors for MilModel {
    fn tensors<'a>(&'a self, prefix: &str, out: &mut Vec<super::params::TensorView<'a>>) {
        match self {
            MilModel::ClamSb(p) => p.tensors(prefix, out),
            MilModel::Abmil(p) => p.tensors(prefix, out),
        }
    }

    fn tensors_mut<'a>(&'a mut self, out: &mut Vec<&'a mut [f64]>) {
        match self {
            MilModel::ClamSb(p) => p.tensors_mut(out),
            MilModel::Abmil(p) => p.tensors_mut(out),
        }
    }

    fn zeros_like(&self) -> Self {
        match self {
            MilModel::ClamSb(p) => MilModel::ClamSb(p.zeros_like()),
            MilModel::Abmil(p) => MilModel::Abmil(p.zeros_like()),
        }
    }
}

/// A decoded PMD1 file.
#[derive(Clone, Debug)]
pub struct ModelFile {
    pub model: MilModel,
    pub hyperparameters: Value,
    pub seed: u64,
}

#[derive(Deserialize)]
struct TensorHeader {
    name: String,
    rows: usize,
    cols: usize,
}

#[derive(Deserialize)]
struct ModelHeader {
    kind: ModelKind,
    config: Value,
    #[serde(default)]
    hyperparameters: Value,
    #[serde(default)]
    seed: u64,
    tensors: Vec<TensorHeader>,
}

impl ModelFile {
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 8 {
            return Err(Error::format(bytes.len(), "file shorter than the 8-byte PMD1 preamble"));
        }
        if &bytes[..4] != MODEL_MAGIC {
            return Err(Error::format(0, "bad magic, expected PMD1"));
        }
        let header_len = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
        let body = 8 + header_len;
        if bytes.len() < body {
            return Err(Error::format(
                bytes.len(),
                format!("header needs {header_len} bytes, file has {}", bytes.len() - 8),
            ));
        }
        let header: ModelHeader = serde_json::from_slice(&bytes[8..body])
            .map_err(|e| Error::format(8, format!("bad header JSON: {e}")))?;
        let mut dummy = Rng::new(0);
        let mut model = match header.kind {
            ModelKind::ClamSb => {
                let cfg: ClamConfig = serde_json::from_value(header.config)
                    .map_err(|e| Error::format(8, format!("bad CLAM config: {e}")))?;
                MilModel::ClamSb(ClamSBParams::init(&cfg, &mut dummy))
            }
            ModelKind::Abmil => {
                let cfg: AbmilConfig = serde_json::from_value(header.config)
                    .map_err(|e| Error::format(8, format!("bad ABMIL config: {e}")))?;
                MilModel::Abmil(AbmilParams::init(&cfg, &mut dummy))
            }
        };
        let expected: Vec<(String, usize, usize)> = model
            .views()
            .iter()
            .map(|v| (v.name.clone(), v.rows, v.cols))
            .collect();
        let declared: Vec<(String, usize, usize)> = header
            .tensors
            .into_iter()
            .map(|t| (t.name, t.rows, t.cols))
            .collect();
        if expected != declared {
            return Err(Error::format(8, "tensor table does not match model config"));
        }
        let count: usize = expected.iter().map(|(_, r, c)| r * c).sum();
        let need = body + 4 * count;
        if bytes.len() != need {
            return Err(Error::format(
                bytes.len().min(need),
                format!("expected {need} bytes in total, found {}", bytes.len()),
            ));
        }
        let flat: Vec<f64> = bytes[body..]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect();
        model.assign_flat(&flat);
        Ok(ModelFile {
            model,
            hyperparameters: header.hyperparameters,
            seed: header.seed,
        })
    }
}

/// Attention weights for `bag` in eval mode.
pub fn extract_attention(model: &MilModel, bag: &DenseMatrix, class: Option<usize>) -> Result<Vec<f64>> {
    let fwd = model.forward(bag, Mode::Eval, &mut Rng::new(0))?;
    fwd.attention(class)
}
