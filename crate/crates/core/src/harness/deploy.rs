use std::path::Path;

use serde_json::{json, Value};

use super::config::TrainConfig;
use crate::error::{Error, Result};
use crate::featstore::{FeatureBag, FeatureScaler};
use crate::mil::{MilModel, ModelFile};

/// A MIL model with the feature scaler fitted at training time.
#[derive(Clone, Debug)]
pub struct TrainedModel {
    pub model: MilModel,
    pub scaler: Option<FeatureScaler>,
}

/// PMD1 hyperparameter block written by training.
pub fn training_hyperparameters(cfg: &TrainConfig, scaler: Option<&FeatureScaler>, best_epoch: usize) -> Value {
    json!({ "train": cfg, "scaler": scaler, "best_epoch": best_epoch })
}

impl TrainedModel {
    pub fn from_file(file: ModelFile) -> Result<Self> {
        let scaler: Option<FeatureScaler> = match file.hyperparameters.get("scaler") {
            Some(v) if !v.is_null() => Some(serde_json::from_value(v.clone())?),
            _ => None,
        };
        if let Some(s) = &scaler {
            if s.mean.len() != file.model.feat_dim() {
                return Err(Error::contract(format!(
                    "stored scaler has {} dims, model expects {}",
                    s.mean.len(),
                    file.model.feat_dim()
                )));
            }
        }
        Ok(Self { model: file.model, scaler })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_file(MilModel::load(path)?)
    }

    /// Checks the feature width and applies the stored scaler.
    pub fn prepare(&self, mut bag: FeatureBag) -> Result<FeatureBag> {
        if bag.feature_dim() != self.model.feat_dim() {
            return Err(Error::contract(format!(
                "bag {} has {} features, model expects {}",
                bag.slide_id,
                bag.feature_dim(),
                self.model.feat_dim()
            )));
        }
        if let Some(s) = &self.scaler {
            s.apply(&mut bag)?;
        }
        Ok(bag)
    }
}
