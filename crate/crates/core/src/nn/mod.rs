//! Dense numeric kernel: matrices, activations, losses, optimizer and the
//! finite-difference checker used to validate every analytic gradient.

pub mod adam;
pub mod gradcheck;
pub mod loss;
pub mod matrix;
pub mod ops;

pub use adam::{adam_step, AdamHyper, AdamState};
pub use gradcheck::{finite_diff_grad, relative_error};
pub use loss::{
    focal_loss, smooth_labels, weighted_cross_entropy, FocalLossConfig, LossOutput,
    SmoothedTarget,
};
pub use matrix::DenseMatrix;
pub use ops::{
    affine, argmax, dropout, gelu, gelu_grad, log_softmax, sigmoid, softmax, AffineParams, Mode,
};
