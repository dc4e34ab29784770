use serde::Serialize;

use super::config::TrainConfig;
use super::folds::{stratified_kfold, FoldAssignment};
use super::metrics::MetricsReport;
use super::train::{evaluate_model, train_model, EpochRecord};
use crate::error::{Error, Result};
use crate::featstore::{DatasetManifest, FeatureBag, FeatureScaler, Split};
use crate::mil::MilModel;
use crate::rng::derive_seed;

/// Stream used to seed fold assignment, disjoint from per-fold training seeds.
const FOLD_STREAM: u64 = u64::MAX;

#[derive(Clone, Debug, Serialize)]
pub struct FoldRow {
    pub fold: usize,
    pub auc: Option<f64>,
    pub accuracy: f64,
    pub macro_f1: f64,
    pub confusion: [[usize; 3]; 3],
    pub n_val: usize,
    pub best_epoch: usize,
    pub epochs_run: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct MeanRow {
    pub auc: Option<f64>,
    pub accuracy: f64,
    pub macro_f1: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CvReport {
    pub config: TrainConfig,
    pub k: usize,
    pub folds: Vec<FoldRow>,
    pub mean: MeanRow,
}

#[derive(Clone, Debug)]
pub struct FoldOutcome {
    pub fold: usize,
    pub model: MilModel,
    /// Positions in the `bags` slice passed to [`cross_validate`].
    pub val_indices: Vec<usize>,
    pub history: Vec<EpochRecord>,
    pub metrics: MetricsReport,
    pub scaler: Option<FeatureScaler>,
}

#[derive(Clone, Debug)]
pub struct CvOutcome {
    pub report: CvReport,
    pub folds: Vec<FoldOutcome>,
    pub assignment: FoldAssignment,
}

impl CvReport {
    pub fn to_json(&self) -> Result<String> {
        crate::io::to_stable_json(self)
    }
}

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = v.collect();
    v.iter().sum::<f64>() / v.len() as f64
}

fn run_fold(bags: &[FeatureBag], assignment: &FoldAssignment, fold: usize, cfg: &TrainConfig) -> Result<FoldOutcome> {
    let val_idx = assignment.folds[fold].clone();
    let train_idx = assignment.training_indices(fold);
    let fold_cfg = TrainConfig { seed: derive_seed(cfg.seed, fold as u64), ..cfg.clone() };
    let (scaler, owned): (Option<FeatureScaler>, Option<Vec<FeatureBag>>) = if cfg.standardize {
        let s = FeatureScaler::fit(train_idx.iter().map(|&i| &bags[i]))?;
        let mut copy = bags.to_vec();
        for b in copy.iter_mut() {
            s.apply(b)?;
        }
        (Some(s), Some(copy))
    } else {
        (None, None)
    };
    let data = owned.as_deref().unwrap_or(bags);
    let train: Vec<&FeatureBag> = train_idx.iter().map(|&i| &data[i]).collect();
    let val: Vec<&FeatureBag> = val_idx.iter().map(|&i| &data[i]).collect();
    let out = train_model(&train, &val, &fold_cfg).map_err(|e| match e {
        Error::Numeric(m) => Error::Numeric(format!("fold {fold}: {m}")),
        Error::Contract(m) => Error::Contract(format!("fold {fold}: {m}")),
        other => other,
    })?;
    let metrics = evaluate_model(&out.model, &val)?;
    Ok(FoldOutcome { fold, model: out.model, val_indices: val_idx, history: out.history, metrics, scaler })
}

/// Stratified k-fold CV over `bags`; the held-out fold is also the
/// early-stopping set. Folds run on up to `jobs` threads with identical results.
pub fn cross_validate(bags: &[FeatureBag], cfg: &TrainConfig, k: usize, jobs: usize) -> Result<CvOutcome> {
    let labels: Vec<usize> = bags.iter().map(|b| b.label as usize).collect();
    let assignment = stratified_kfold(&labels, k, derive_seed(cfg.seed, FOLD_STREAM))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let folds: Vec<FoldOutcome> = pool.install(|| {
        use rayon::prelude::*;
        (0..k).into_par_iter().map(|f| run_fold(bags, &assignment, f, cfg)).collect::<Result<_>>()
    })?;
    let rows: Vec<FoldRow> = folds
        .iter()
        .map(|f| FoldRow {
            fold: f.fold,
            auc: f.metrics.auc_macro_ovr,
            accuracy: f.metrics.accuracy,
            macro_f1: f.metrics.macro_f1,
            confusion: f.metrics.confusion,
            n_val: f.val_indices.len(),
            best_epoch: f.history.iter().min_by(|a, b| a.val_loss.total_cmp(&b.val_loss)).map_or(0, |r| r.epoch),
            epochs_run: f.history.len(),
        })
        .collect();
    let aucs: Option<Vec<f64>> = rows.iter().map(|r| r.auc).collect();
    let mean_row = MeanRow {
        auc: aucs.map(|a| mean(a.into_iter())),
        accuracy: mean(rows.iter().map(|r| r.accuracy)),
        macro_f1: mean(rows.iter().map(|r| r.macro_f1)),
    };
    Ok(CvOutcome {
        report: CvReport { config: cfg.clone(), k, folds: rows, mean: mean_row },
        folds,
        assignment,
    })
}

/// Entries eligible for training paths; a `test` entry here is a leakage error.
pub fn assert_no_test_entries(manifest: &DatasetManifest, selected: &[usize]) -> Result<()> {
    for &i in selected {
        let e = &manifest.entries[i];
        if e.split == Split::Test {
            return Err(Error::Leakage(format!("test slide {} reached a training path", e.slide_id)));
        }
    }
    Ok(())
}

/// Indices of every non-test entry; CV never sees held-out test slides.
pub fn cv_indices(manifest: &DatasetManifest) -> Result<Vec<usize>> {
    let idx: Vec<usize> = (0..manifest.entries.len()).filter(|&i| manifest.entries[i].split != Split::Test).collect();
    assert_no_test_entries(manifest, &idx)?;
    Ok(idx)
}

/// Evaluation paths accept only `test` entries.
pub fn require_test_split(manifest: &DatasetManifest) -> Result<()> {
    if manifest.entries.is_empty() {
        return Err(Error::Config("manifest has no entries to evaluate".into()));
    }
    if let Some(e) = manifest.entries.iter().find(|e| e.split != Split::Test) {
        return Err(Error::Leakage(format!(
            "slide {} is marked {}, evaluation accepts only test entries",
            e.slide_id, e.split
        )));
    }
    Ok(())
}
