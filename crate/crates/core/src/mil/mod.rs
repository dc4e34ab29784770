//! Trainable attention-MIL heads and their exact backward passes.

pub mod abmil;
pub mod attention;
pub mod clam;
pub mod model;
pub mod params;

pub use abmil::{abmil_forward, AbmilConfig, AbmilParams};
pub use attention::{attention_pool, gated_attention_scores, GatedAttentionParams};
pub use clam::{clam_instance_loss, clam_sb_forward, ClamConfig, ClamLossConfig, ClamSBParams};
pub use model::{extract_attention, ForwardOutput, MilLossConfig, MilModel, ModelFile, ModelKind};
pub use params::{ParamTensors, TensorView};
