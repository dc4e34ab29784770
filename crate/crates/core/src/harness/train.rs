use serde::{Deserialize, Serialize};

use super::config::TrainConfig;
use super::metrics::{evaluate_metrics, MetricsReport};
use crate::error::{Error, Result};
use crate::featstore::FeatureBag;
use crate::mil::{MilLossConfig, MilModel, ParamTensors};
use crate::nn::{adam_step, AdamState, Mode};
use crate::rng::{derive_seed, Rng};

/// Sub-streams of a training seed.
const INIT_STREAM: u64 = 0;
const DROPOUT_STREAM: u64 = 1;
const ORDER_STREAM: u64 = 2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    /// Mean bag-level loss on the validation bags (NaN without validation bags).
    pub val_loss: f64,
    pub val_acc: f64,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    /// Parameters from the epoch with the lowest validation loss.
    pub model: MilModel,
    pub history: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub loss: MilLossConfig,
}

pub fn history_csv(history: &[EpochRecord]) -> String {
    let mut s = String::from("epoch,train_loss,val_loss,val_acc\n");
    for r in history {
        s.push_str(&format!("{},{:.9},{:.9},{:.6}\n", r.epoch, r.train_loss, r.val_loss, r.val_acc));
    }
    s
}

/// Eval-mode class probabilities for each bag.
pub fn predict_bags(model: &MilModel, bags: &[&FeatureBag]) -> Result<Vec<Vec<f64>>> {
    let mut rng = Rng::new(0);
    bags.iter()
        .map(|b| Ok(model.forward(&b.features, Mode::Eval, &mut rng)?.probabilities()))
        .collect()
}

pub fn evaluate_model(model: &MilModel, bags: &[&FeatureBag]) -> Result<MetricsReport> {
    let probs = predict_bags(model, bags)?;
    let labels: Vec<usize> = bags.iter().map(|b| b.label as usize).collect();
    evaluate_metrics(&probs, &labels)
}

fn validate_epoch(model: &MilModel, val: &[&FeatureBag], loss: &MilLossConfig) -> Result<(f64, f64)> {
    if val.is_empty() {
        return Ok((f64::NAN, f64::NAN));
    }
    let mut rng = Rng::new(0);
    let (mut total, mut correct) = (0.0, 0usize);
    for b in val {
        let fwd = model.forward(&b.features, Mode::Eval, &mut rng)?;
        total += model.bag_loss(&fwd, b.label as usize, loss)?;
        correct += (fwd.predicted_class() == b.label as usize) as usize;
    }
    Ok((total / val.len() as f64, correct as f64 / val.len() as f64))
}

/// One bag per Adam step; early stopping on validation bag loss.
pub fn train_model(train: &[&FeatureBag], val: &[&FeatureBag], cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    let Some(first) = train.first() else {
        return Err(Error::contract("training set is empty"));
    };
    let feat_dim = first.feature_dim();
    if let Some(b) = train.iter().chain(val).find(|b| b.feature_dim() != feat_dim) {
        return Err(Error::contract(format!("bag {} has dim {}, expected {feat_dim}", b.slide_id, b.feature_dim())));
    }
    let labels: Vec<usize> = train.iter().map(|b| b.label as usize).collect();
    let loss = cfg.loss_config(&labels);
    let mut model = cfg.init_model(feat_dim, &mut Rng::new(derive_seed(cfg.seed, INIT_STREAM)));
    let mut dropout_rng = Rng::new(derive_seed(cfg.seed, DROPOUT_STREAM));
    let mut order_rng = Rng::new(derive_seed(cfg.seed, ORDER_STREAM));
    let mut adam = {
        let views = model.views();
        let slices: Vec<&[f64]> = views.iter().map(|v| v.data).collect();
        AdamState::new(&slices, cfg.adam())
    };

    let mut history = Vec::new();
    let mut best = (f64::INFINITY, 0usize, model.clone());
    let mut order: Vec<usize> = (0..train.len()).collect();
    for epoch in 0..cfg.max_epochs {
        order_rng.shuffle(&mut order);
        let mut epoch_loss = 0.0;
        for &i in &order {
            let bag = train[i];
            let lg = model.loss_and_grad(&bag.features, bag.label as usize, &loss, Mode::Train, &mut dropout_rng)?;
            if !lg.loss.is_finite() {
                return Err(Error::Numeric(format!("non-finite loss at epoch {epoch} on bag {}", bag.slide_id)));
            }
            epoch_loss += lg.loss;
            let gviews = lg.grads.views();
            let grads: Vec<&[f64]> = gviews.iter().map(|v| v.data).collect();
            adam_step(&mut model.slices_mut(), &grads, &mut adam, epoch)?;
        }
        if !model.is_finite() {
            return Err(Error::Numeric(format!("parameters diverged at epoch {epoch}")));
        }
        let (val_loss, val_acc) = validate_epoch(&model, val, &loss)?;
        history.push(EpochRecord { epoch, train_loss: epoch_loss / train.len() as f64, val_loss, val_acc });
        if val.is_empty() {
            best = (f64::NAN, epoch, model.clone());
            continue;
        }
        if val_loss < best.0 {
            best = (val_loss, epoch, model.clone());
        } else if epoch - best.1 >= cfg.patience {
            break;
        }
    }
    Ok(TrainOutcome { model: best.2, history, best_epoch: best.1, loss })
}
