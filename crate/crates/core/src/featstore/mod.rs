//! Feature bags on disk, dataset manifests and feature generators.

pub mod bag;
pub mod handcrafted;
pub mod manifest;
pub mod scaler;
pub mod synthetic;

pub use bag::{FeatureBag, BAG_MAGIC, BAG_VERSION};
pub use handcrafted::{describe_patch, handcrafted_patch_features, HANDCRAFTED_DIM};
pub use manifest::{load_manifest, DatasetManifest, ManifestEntry, Split};
pub use scaler::FeatureScaler;
pub use synthetic::{generate_synthetic_dataset, read_signal_map, SyntheticDataset, SyntheticSpec};
