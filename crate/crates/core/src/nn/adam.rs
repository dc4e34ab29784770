use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamHyper {
    pub base_lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps_num: f64,
    /// L2 coefficient added to gradients as `reg * theta`.
    pub weight_decay_l2: f64,
    /// Linear warmup length in epochs; 0 disables warmup.
    pub warmup_epochs: usize,
}

impl Default for AdamHyper {
    fn default() -> Self {
        Self {
            base_lr: 3e-5,
            beta1: 0.9,
            beta2: 0.999,
            eps_num: 1e-8,
            weight_decay_l2: 1e-4,
            warmup_epochs: 5,
        }
    }
}

impl AdamHyper {
    pub fn learning_rate(&self, epoch: usize) -> f64 {
        if self.warmup_epochs == 0 {
            return self.base_lr;
        }
        self.base_lr * ((epoch + 1) as f64 / self.warmup_epochs as f64).min(1.0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    pub step_count: u64,
    pub hyper: AdamHyper,
}

impl AdamState {
    /// Zeroed moments shaped like `params`.
    pub fn new(params: &[&[f64]], hyper: AdamHyper) -> Self {
        let zeros: Vec<Vec<f64>> = params.iter().map(|p| vec![0.0; p.len()]).collect();
        Self {
            m: zeros.clone(),
            v: zeros,
            step_count: 0,
            hyper,
        }
    }
}

/// One bias-corrected Adam update of every tensor in `params`.
pub fn adam_step(
    params: &mut [&mut [f64]],
    grads: &[&[f64]],
    state: &mut AdamState,
    epoch: usize,
) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.m.len() {
        return Err(Error::contract(format!(
            "adam tensor count: params {}, grads {}, state {}",
            params.len(),
            grads.len(),
            state.m.len()
        )));
    }
    for (i, (p, g)) in params.iter().zip(grads).enumerate() {
        if p.len() != g.len() || p.len() != state.m[i].len() {
            return Err(Error::contract(format!("adam tensor {i} shape mismatch")));
        }
    }
    let h = &state.hyper;
    state.step_count += 1;
    let t = state.step_count as i32;
    let lr = h.learning_rate(epoch);
    let c1 = 1.0 - h.beta1.powi(t);
    let c2 = 1.0 - h.beta2.powi(t);
    for (i, (p, g)) in params.iter_mut().zip(grads).enumerate() {
        let m = &mut state.m[i];
        let v = &mut state.v[i];
        for j in 0..p.len() {
            let gj = g[j] + h.weight_decay_l2 * p[j];
            m[j] = h.beta1 * m[j] + (1.0 - h.beta1) * gj;
            v[j] = h.beta2 * v[j] + (1.0 - h.beta2) * gj * gj;
            let m_hat = m[j] / c1;
            let v_hat = v[j] / c2;
            p[j] -= lr * m_hat / (v_hat.sqrt() + h.eps_num);
        }
    }
    Ok(())
}
