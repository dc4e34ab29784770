use std::path::Path;

use serde::{Deserialize, Serialize};

use super::tree::{build_tree, softmax_grad_hess, GbdtConfig, TreeNode};
use crate::error::{Error, Result};
use crate::io::{write_atomic, ByteReader};
use crate::nn::DenseMatrix;

pub const ENSEMBLE_MAGIC: &[u8; 4] = b"PGB1";

/// `rounds × n_classes` trees added to zero base logits.
#[derive(Clone, Debug, PartialEq)]
pub struct TreeEnsemble {
    pub config: GbdtConfig,
    pub feature_names: Vec<String>,
    pub trees: Vec<Vec<TreeNode>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    pub logits: Vec<f64>,
    pub probs: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct TrainedEnsemble {
    pub ensemble: TreeEnsemble,
    /// Mean training log-loss before the first round and after each round.
    pub loss_history: Vec<f64>,
}

fn mean_log_loss(logits: &[Vec<f64>], y: &[usize]) -> Result<f64> {
    let mut total = 0.0;
    for (l, &c) in logits.iter().zip(y) {
        total -= crate::nn::log_softmax(l)?[c];
    }
    Ok(total / y.len() as f64)
}

pub fn train_ensemble(
    x: &DenseMatrix,
    y: &[usize],
    feature_names: Vec<String>,
    cfg: &GbdtConfig,
) -> Result<TrainedEnsemble> {
    cfg.validate()?;
    let (m, p) = x.shape();
    if m < 2 || y.len() != m {
        return Err(Error::contract(format!("need >= 2 samples with labels, got {m} rows / {} labels", y.len())));
    }
    if !x.is_finite() {
        return Err(Error::Numeric("non-finite GBDT input features".into()));
    }
    if feature_names.len() != p {
        return Err(Error::contract(format!("{} feature names for {p} columns", feature_names.len())));
    }
    if let Some(&bad) = y.iter().find(|&&c| c >= cfg.n_classes) {
        return Err(Error::contract(format!("label {bad} outside 0..{}", cfg.n_classes)));
    }
    let k = cfg.n_classes;
    let rows: Vec<usize> = (0..m).collect();
    let mut logits = vec![vec![0.0; k]; m];
    let mut history = vec![mean_log_loss(&logits, y)?];
    let mut trees = Vec::with_capacity(cfg.n_rounds);
    let mut g = vec![vec![0.0; m]; k];
    let mut h = vec![vec![0.0; m]; k];
    for _ in 0..cfg.n_rounds {
        for i in 0..m {
            let (gi, hi) = softmax_grad_hess(&logits[i], y[i])?;
            for c in 0..k {
                g[c][i] = gi[c];
                h[c][i] = hi[c];
            }
        }
        let round: Vec<TreeNode> = (0..k)
            .map(|c| build_tree(x, &rows, &g[c], &h[c], cfg, 0))
            .collect::<Result<_>>()?;
        for (i, l) in logits.iter_mut().enumerate() {
            for (c, t) in round.iter().enumerate() {
                l[c] += cfg.learning_rate * t.predict(x.row(i));
            }
        }
        trees.push(round);
        history.push(mean_log_loss(&logits, y)?);
    }
    Ok(TrainedEnsemble {
        ensemble: TreeEnsemble { config: cfg.clone(), feature_names, trees },
        loss_history: history,
    })
}

pub fn predict_ensemble(ens: &TreeEnsemble, x: &[f64]) -> Result<Prediction> {
    if x.len() != ens.n_features() {
        return Err(Error::contract(format!("expected {} features, got {}", ens.n_features(), x.len())));
    }
    let mut logits = vec![0.0; ens.config.n_classes];
    for round in &ens.trees {
        for (c, t) in round.iter().enumerate() {
            logits[c] += ens.config.learning_rate * t.predict(x);
        }
    }
    let probs = crate::nn::softmax(&logits)?;
    Ok(Prediction { logits, probs })
}

#[derive(Serialize, Deserialize)]
struct EnsembleHeader {
    config: GbdtConfig,
    feature_names: Vec<String>,
    rounds: usize,
}

fn write_node(node: &TreeNode, out: &mut Vec<u8>) {
    match node {
        TreeNode::Leaf { weight } => {
            out.push(1);
            out.extend_from_slice(&(*weight as f32).to_le_bytes());
        }
        TreeNode::Split { feature, threshold, left, right, .. } => {
            out.push(0);
            out.extend_from_slice(&(*feature as u16).to_le_bytes());
            out.extend_from_slice(&(*threshold as f32).to_le_bytes());
            write_node(left, out);
            write_node(right, out);
        }
    }
}

fn read_node(r: &mut ByteReader, n_features: usize, depth: usize) -> Result<TreeNode> {
    let at = r.offset();
    match r.u8("node flag")? {
        1 => Ok(TreeNode::Leaf { weight: r.f32("leaf weight")? as f64 }),
        0 => {
            if depth > 64 {
                return Err(Error::format(at, "tree deeper than 64 levels"));
            }
            let feature = r.u16("split feature")? as usize;
            if feature >= n_features {
                return Err(Error::format(at + 1, format!("split feature {feature} >= {n_features}")));
            }
            let threshold = r.f32("threshold")? as f64;
            if !threshold.is_finite() {
                return Err(Error::format(at + 3, "non-finite threshold"));
            }
            let left = Box::new(read_node(r, n_features, depth + 1)?);
            let right = Box::new(read_node(r, n_features, depth + 1)?);
            Ok(TreeNode::Split { feature, threshold, gain: 0.0, left, right })
        }
        f => Err(Error::format(at, format!("bad node flag {f}"))),
    }
}

impl TreeEnsemble {
    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    /// Total split gain per feature.
    pub fn feature_importance(&self) -> Vec<f64> {
        let mut acc = vec![0.0; self.n_features()];
        self.trees.iter().flatten().for_each(|t| t.add_importance(&mut acc));
        acc
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        if self.n_features() > u16::MAX as usize + 1 {
            return Err(Error::contract("PGB1 stores feature indices as u16"));
        }
        let header = serde_json::to_vec(&EnsembleHeader {
            config: self.config.clone(),
            feature_names: self.feature_names.clone(),
            rounds: self.trees.len(),
        })?;
        let mut out = Vec::new();
        out.extend_from_slice(ENSEMBLE_MAGIC);
        out.extend_from_slice(&(header.len() as u32).to_le_bytes());
        out.extend_from_slice(&header);
        for t in self.trees.iter().flatten() {
            write_node(t, &mut out);
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = ByteReader::new(bytes, "PGB1 file");
        if r.take(4, "magic")? != ENSEMBLE_MAGIC {
            return Err(Error::format(0, "bad magic, expected PGB1"));
        }
        let len = r.u32("header length")? as usize;
        let header: EnsembleHeader = serde_json::from_slice(r.take(len, "JSON header")?)
            .map_err(|e| Error::format(8, format!("bad header JSON: {e}")))?;
        header.config.validate()?;
        let nf = header.feature_names.len();
        let mut trees = Vec::with_capacity(header.rounds);
        for _ in 0..header.rounds {
            let round = (0..header.config.n_classes)
                .map(|_| read_node(&mut r, nf, 0))
                .collect::<Result<Vec<_>>>()?;
            trees.push(round);
        }
        r.finish()?;
        Ok(Self { config: header.config, feature_names: header.feature_names, trees })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, &self.to_bytes()?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::file(path, e))?;
        Self::from_bytes(&bytes)
    }
}
