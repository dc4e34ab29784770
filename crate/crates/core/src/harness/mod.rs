//! Training loops, stratified cross-validation and classification metrics.

pub mod config;
pub mod cv;
pub mod deploy;
pub mod folds;
pub mod metrics;
pub mod train;

pub use config::{inverse_frequency_weights, TrainConfig};
pub use cv::{cross_validate, cv_indices, require_test_split, CvOutcome, CvReport, FoldOutcome};
pub use deploy::{training_hyperparameters, TrainedModel};
pub use folds::{stratified_kfold, FoldAssignment};
pub use metrics::{binary_auc, evaluate_metrics, roc_auc_macro_ovr, MetricsReport};
pub use train::{evaluate_model, history_csv, predict_bags, train_model, EpochRecord, TrainOutcome};
