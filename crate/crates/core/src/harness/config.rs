use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mil::{AbmilConfig, ClamConfig, ClamLossConfig, MilLossConfig, MilModel, ModelKind};
use crate::nn::{AdamHyper, FocalLossConfig};
use crate::rng::Rng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub model: ModelKind,
    pub lr: f64,
    pub reg: f64,
    pub dropout: f64,
    pub max_epochs: usize,
    pub warmup_epochs: usize,
    pub bag_weight: f64,
    /// Top/bottom instances pseudo-labelled per bag (CLAM only).
    pub b: usize,
    pub focal: FocalLossConfig,
    /// ABMIL class weights; inverse training-class frequency (mean 1) when absent.
    pub class_weights: Option<Vec<f64>>,
    pub patience: usize,
    pub seed: u64,
    /// Per-dimension standardization fitted on training instances.
    pub standardize: bool,
    pub clam: ClamConfig,
    pub abmil: AbmilConfig,
}

impl TrainConfig {
    pub fn clam_defaults() -> Self {
        Self {
            model: ModelKind::ClamSb,
            lr: 3e-5,
            reg: 1e-4,
            dropout: 0.4,
            max_epochs: 100,
            warmup_epochs: 5,
            bag_weight: 0.5,
            b: 8,
            focal: FocalLossConfig::default(),
            class_weights: None,
            patience: 20,
            seed: 42,
            standardize: false,
            clam: ClamConfig::default(),
            abmil: AbmilConfig::default(),
        }
    }

    pub fn abmil_defaults() -> Self {
        Self {
            model: ModelKind::Abmil,
            lr: 4e-4,
            max_epochs: 20,
            warmup_epochs: 0,
            patience: 5,
            ..Self::clam_defaults()
        }
    }

    pub fn defaults(kind: ModelKind) -> Self {
        match kind {
            ModelKind::ClamSb => Self::clam_defaults(),
            ModelKind::Abmil => Self::abmil_defaults(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0 && self.lr.is_finite()) || !(self.reg >= 0.0) {
            return Err(Error::Config("lr must be > 0 and reg >= 0".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config("dropout must lie in [0, 1)".into()));
        }
        if !(0.0..=1.0).contains(&self.bag_weight) {
            return Err(Error::Config("bag_weight must lie in [0, 1]".into()));
        }
        if self.max_epochs == 0 {
            return Err(Error::Config("max_epochs must be positive".into()));
        }
        self.focal.validate()?;
        if let Some(w) = &self.class_weights {
            if w.len() != 3 || w.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
                return Err(Error::Config("class_weights needs three positive values".into()));
            }
        }
        Ok(())
    }

    pub fn adam(&self) -> AdamHyper {
        AdamHyper {
            base_lr: self.lr,
            weight_decay_l2: self.reg,
            warmup_epochs: self.warmup_epochs,
            ..AdamHyper::default()
        }
    }

    pub fn init_model(&self, feat_dim: usize, rng: &mut Rng) -> MilModel {
        match self.model {
            ModelKind::ClamSb => {
                let cfg = ClamConfig { feat_dim, dropout: self.dropout, ..self.clam.clone() };
                MilModel::ClamSb(crate::mil::ClamSBParams::init(&cfg, rng))
            }
            ModelKind::Abmil => {
                let cfg = AbmilConfig { feat_dim, dropout: self.dropout, ..self.abmil.clone() };
                MilModel::Abmil(crate::mil::AbmilParams::init(&cfg, rng))
            }
        }
    }

    pub fn loss_config(&self, train_labels: &[usize]) -> MilLossConfig {
        match self.model {
            ModelKind::ClamSb => MilLossConfig::Clam(ClamLossConfig {
                focal: self.focal.clone(),
                bag_weight: self.bag_weight,
                b: self.b,
            }),
            ModelKind::Abmil => MilLossConfig::Abmil {
                class_weights: self
                    .class_weights
                    .clone()
                    .unwrap_or_else(|| inverse_frequency_weights(train_labels, 3)),
            },
        }
    }
}

/// `w_c ∝ 1 / count_c`, rescaled to mean 1. Absent classes count as one.
pub fn inverse_frequency_weights(labels: &[usize], n_classes: usize) -> Vec<f64> {
    let mut counts = vec![0usize; n_classes];
    for &l in labels {
        counts[l] += 1;
    }
    let inv: Vec<f64> = counts.iter().map(|&c| 1.0 / c.max(1) as f64).collect();
    let mean = inv.iter().sum::<f64>() / n_classes as f64;
    inv.iter().map(|v| v / mean).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_have_unit_mean() {
        let w = inverse_frequency_weights(&[0, 0, 0, 0, 1, 2, 2], 3);
        assert!((w.iter().sum::<f64>() / 3.0 - 1.0).abs() < 1e-15);
        assert!((w[1] / w[0] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn table_defaults() {
        let c = TrainConfig::clam_defaults();
        assert_eq!((c.lr, c.reg, c.dropout, c.max_epochs, c.warmup_epochs, c.b), (3e-5, 1e-4, 0.4, 100, 5, 8));
        let a = TrainConfig::abmil_defaults();
        assert_eq!((a.lr, a.max_epochs), (4e-4, 20));
    }
}
