//! Gradient-boosted trees over slide-level descriptors.

pub mod enhanced;
pub mod ensemble;
pub mod toy;
pub mod tree;

pub use enhanced::{
    build_enhanced_features, enhanced_from_forward, EnhancedFeatures, ENHANCED_DIM, ENHANCED_FEATURE_NAMES,
};
pub use ensemble::{predict_ensemble, train_ensemble, Prediction, TrainedEnsemble, TreeEnsemble, ENSEMBLE_MAGIC};
pub use toy::toy_dataset;
pub use tree::{build_tree, find_best_split, leaf_weight, softmax_grad_hess, GbdtConfig, SplitCandidate, TreeNode};
