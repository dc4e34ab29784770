//! Multiple-instance learning toolkit for slide-level risk classification.
//!
//! The pipeline runs tissue segmentation and patching ([`wsi`]), feature-bag
//! storage ([`featstore`]), two attention-MIL heads ([`mil`]), a boosted-tree
//! stage over bag-level statistics ([`gbdt`]), cross-validation
//! ([`harness`]) and attention heatmaps ([`heatmap`]).

pub mod cli;
pub mod error;
pub mod featstore;
pub mod gbdt;
pub mod harness;
pub mod heatmap;
pub mod io;
pub mod mil;
pub mod nn;
pub mod rng;
pub mod wsi;

pub use error::{Error, Result};
