//! Exact-greedy regression trees on second-order (g, h) statistics.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::DenseMatrix;

/// Floor applied to per-sample hessians.
pub const HESSIAN_FLOOR: f64 = 1e-16;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GbdtConfig {
    pub n_rounds: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub lambda: f64,
    pub gamma_leaf: f64,
    pub min_child_hessian: f64,
    pub n_classes: usize,
}

impl Default for GbdtConfig {
    fn default() -> Self {
        Self {
            n_rounds: 200,
            learning_rate: 0.1,
            max_depth: 6,
            lambda: 1.0,
            gamma_leaf: 0.0,
            min_child_hessian: 1.0,
            n_classes: 3,
        }
    }
}

impl GbdtConfig {
    pub fn validate(&self) -> Result<()> {
        let nonneg = [self.lambda, self.gamma_leaf, self.min_child_hessian];
        if nonneg.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Config("lambda, gamma_leaf and min_child_hessian must be finite and >= 0".into()));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config("learning_rate must be finite and >= 0".into()));
        }
        if self.n_classes < 2 {
            return Err(Error::Config("n_classes must be at least 2".into()));
        }
        Ok(())
    }
}

/// Softmax log-loss gradient and hessian for one sample.
pub fn softmax_grad_hess(logits: &[f64], label: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if label >= logits.len() {
        return Err(Error::contract(format!("label {label} with {} logits", logits.len())));
    }
    let p = crate::nn::softmax(logits)?;
    let g = p.iter().enumerate().map(|(c, &pc)| pc - (c == label) as u8 as f64).collect();
    let h = p.iter().map(|&pc| (pc * (1.0 - pc)).max(HESSIAN_FLOOR)).collect();
    Ok((g, h))
}

#[derive(Clone, Debug, PartialEq)]
pub enum TreeNode {
    Leaf {
        weight: f64,
    },
    Split {
        feature: usize,
        /// Samples with `x[feature] < threshold` go left.
        threshold: f64,
        gain: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
}

impl TreeNode {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf { weight } => return *weight,
                TreeNode::Split { feature, threshold, left, right, .. } => {
                    node = if x[*feature] < *threshold { left } else { right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn n_leaves(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Split { left, right, .. } => left.n_leaves() + right.n_leaves(),
        }
    }

    pub(crate) fn add_importance(&self, acc: &mut [f64]) {
        if let TreeNode::Split { feature, gain, left, right, .. } = self {
            acc[*feature] += gain;
            left.add_importance(acc);
            right.add_importance(acc);
        }
    }
}

/// `w* = -G / (H + λ)`.
pub fn leaf_weight(g_sum: f64, h_sum: f64, lambda: f64) -> f64 {
    if g_sum == 0.0 {
        0.0
    } else {
        -g_sum / (h_sum + lambda)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplitCandidate {
    pub gain: f64,
    pub threshold: f64,
    /// Number of sorted samples routed left.
    pub left_count: usize,
}

/// Best midpoint split of an ascending column. `g` and `h` follow the column order.
pub fn find_best_split(
    values: &[f64],
    g: &[f64],
    h: &[f64],
    lambda: f64,
    gamma_leaf: f64,
    min_child_hessian: f64,
) -> Option<SplitCandidate> {
    let n = values.len();
    if n < 2 {
        return None;
    }
    let g_total: f64 = g.iter().sum();
    let h_total: f64 = h.iter().sum();
    let parent = g_total * g_total / (h_total + lambda);
    let (mut gl, mut hl) = (0.0, 0.0);
    let mut best: Option<SplitCandidate> = None;
    for i in 0..n - 1 {
        gl += g[i];
        hl += h[i];
        if values[i + 1] <= values[i] {
            continue;
        }
        let (gr, hr) = (g_total - gl, h_total - hl);
        if hl < min_child_hessian || hr < min_child_hessian {
            continue;
        }
        let gain = 0.5 * (gl * gl / (hl + lambda) + gr * gr / (hr + lambda) - parent) - gamma_leaf;
        if best.map_or(true, |b| gain > b.gain) {
            best = Some(SplitCandidate {
                gain,
                threshold: values[i] + (values[i + 1] - values[i]) / 2.0,
                left_count: i + 1,
            });
        }
    }
    best.filter(|b| b.gain > 0.0)
}

struct Best {
    feature: usize,
    cand: SplitCandidate,
}

fn sorted_rows(x: &DenseMatrix, rows: &[usize], feature: usize) -> Vec<usize> {
    let mut r = rows.to_vec();
    r.sort_by(|&a, &b| x.get(a, feature).total_cmp(&x.get(b, feature)).then(a.cmp(&b)));
    r
}

/// Recursive exact-greedy tree over `rows` of `x`.
pub fn build_tree(
    x: &DenseMatrix,
    rows: &[usize],
    g: &[f64],
    h: &[f64],
    cfg: &GbdtConfig,
    depth: usize,
) -> Result<TreeNode> {
    if rows.is_empty() {
        return Err(Error::contract("cannot build a tree over zero samples"));
    }
    let g_sum: f64 = rows.iter().map(|&r| g[r]).sum();
    let h_sum: f64 = rows.iter().map(|&r| h[r]).sum();
    let leaf = TreeNode::Leaf { weight: leaf_weight(g_sum, h_sum, cfg.lambda) };
    if depth >= cfg.max_depth || rows.len() < 2 {
        return Ok(leaf);
    }
    let per_feature: Vec<Option<Best>> = (0..x.cols())
        .into_par_iter()
        .map(|f| {
            let order = sorted_rows(x, rows, f);
            let vals: Vec<f64> = order.iter().map(|&r| x.get(r, f)).collect();
            let gs: Vec<f64> = order.iter().map(|&r| g[r]).collect();
            let hs: Vec<f64> = order.iter().map(|&r| h[r]).collect();
            find_best_split(&vals, &gs, &hs, cfg.lambda, cfg.gamma_leaf, cfg.min_child_hessian)
                .map(|cand| Best { feature: f, cand })
        })
        .collect();
    let mut best: Option<Best> = None;
    for b in per_feature.into_iter().flatten() {
        if best.as_ref().map_or(true, |cur| b.cand.gain > cur.cand.gain) {
            best = Some(b);
        }
    }
    let Some(best) = best else { return Ok(leaf) };
    let (left_rows, right_rows): (Vec<usize>, Vec<usize>) =
        rows.iter().partition(|&&r| x.get(r, best.feature) < best.cand.threshold);
    Ok(TreeNode::Split {
        feature: best.feature,
        threshold: best.cand.threshold,
        gain: best.cand.gain,
        left: Box::new(build_tree(x, &left_rows, g, h, cfg, depth + 1)?),
        right: Box::new(build_tree(x, &right_rows, g, h, cfg, depth + 1)?),
    })
}
