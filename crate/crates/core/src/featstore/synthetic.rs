//! Deterministic stand-in for foundation-model patch features.
//!
//! A class-`c` bag holds `ceil(signal_fraction * n)` instances drawn around the
//! class signature `e_c` and the rest around the origin, all with isotropic
//! Gaussian noise.

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bag::FeatureBag;
use super::manifest::{DatasetManifest, ManifestEntry, Split};
use crate::error::{Error, Result};
use crate::nn::DenseMatrix;
use crate::rng::{derive_seed, Rng};

/// Grid pitch of the synthetic patch coordinates.
const SYNTH_PATCH: u32 = 256;
/// Stream index reserved for the test-split draw.
const SPLIT_STREAM: u64 = u64::MAX;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticSpec {
    pub bags_per_class: [usize; 3],
    pub feature_dim: usize,
    pub min_instances: usize,
    pub max_instances: usize,
    pub signal_fraction: f64,
    pub noise_sigma: f64,
    /// Fraction of each class marked `test` in the manifest; the rest stay unassigned.
    pub test_fraction: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            bags_per_class: [105, 21, 84],
            feature_dim: 64,
            min_instances: 50,
            max_instances: 200,
            signal_fraction: 0.2,
            noise_sigma: 1.0,
            test_fraction: 0.0,
            seed: 42,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.signal_fraction) || !(0.0..=1.0).contains(&self.test_fraction) {
            return Err(Error::Config("signal and test fractions must lie in [0, 1]".into()));
        }
        if self.feature_dim < 3 {
            return Err(Error::Config("feature_dim must be at least 3 for three class signatures".into()));
        }
        if self.min_instances == 0 || self.min_instances > self.max_instances {
            return Err(Error::Config("instance range must satisfy 1 <= min <= max".into()));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::Config("noise_sigma must be finite and non-negative".into()));
        }
        Ok(())
    }

    pub fn total_bags(&self) -> usize {
        self.bags_per_class.iter().sum()
    }
}

#[derive(Clone, Debug)]
pub struct SyntheticDataset {
    pub bags: Vec<FeatureBag>,
    /// Per bag, whether each instance was drawn around the class signature.
    pub signal: Vec<Vec<bool>>,
    pub splits: Vec<Split>,
}

fn slide_id(i: usize) -> String {
    format!("syn{i:04}")
}

fn generate_bag(spec: &SyntheticSpec, index: usize, label: u8) -> (FeatureBag, Vec<bool>) {
    let mut rng = Rng::new(derive_seed(spec.seed, index as u64));
    let n = rng.range_inclusive(spec.min_instances, spec.max_instances);
    let k = (spec.signal_fraction * n as f64).ceil() as usize;
    let mut order: Vec<usize> = (0..n).collect();
    rng.shuffle(&mut order);
    let mut flags = vec![false; n];
    for &i in &order[..k.min(n)] {
        flags[i] = true;
    }
    let d = spec.feature_dim;
    let mut features = DenseMatrix::zeros(n, d);
    for (i, &is_signal) in flags.iter().enumerate() {
        let row = features.row_mut(i);
        for v in row.iter_mut() {
            *v = spec.noise_sigma * rng.gaussian();
        }
        if is_signal {
            row[label as usize] += 1.0;
        }
    }
    let side = (n as f64).sqrt().ceil() as usize;
    let coords = (0..n)
        .map(|i| ((i % side) as u32 * SYNTH_PATCH, (i / side) as u32 * SYNTH_PATCH))
        .collect();
    let bag = FeatureBag { slide_id: slide_id(index), label, coords, features };
    (bag, flags)
}

fn assign_splits(spec: &SyntheticSpec, labels: &[u8]) -> Vec<Split> {
    let mut splits = vec![Split::Unassigned; labels.len()];
    if spec.test_fraction <= 0.0 {
        return splits;
    }
    let mut rng = Rng::new(derive_seed(spec.seed, SPLIT_STREAM));
    for class in 0..3u8 {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        rng.shuffle(&mut members);
        let n_test = (spec.test_fraction * members.len() as f64).round() as usize;
        for &i in &members[..n_test] {
            splits[i] = Split::Test;
        }
    }
    splits
}

pub fn generate_synthetic_dataset(spec: &SyntheticSpec) -> Result<SyntheticDataset> {
    spec.validate()?;
    let labels: Vec<u8> = spec
        .bags_per_class
        .iter()
        .enumerate()
        .flat_map(|(c, &count)| std::iter::repeat(c as u8).take(count))
        .collect();
    let (bags, signal): (Vec<_>, Vec<_>) = labels
        .par_iter()
        .enumerate()
        .map(|(i, &label)| generate_bag(spec, i, label))
        .collect::<Vec<_>>()
        .into_iter()
        .unzip();
    let splits = assign_splits(spec, &labels);
    Ok(SyntheticDataset { bags, signal, splits })
}

impl SyntheticDataset {
    pub fn manifest(&self, base_dir: impl Into<std::path::PathBuf>) -> Result<DatasetManifest> {
        let entries = self
            .bags
            .iter()
            .zip(&self.splits)
            .map(|(b, &split)| ManifestEntry {
                slide_id: b.slide_id.clone(),
                bag_path: format!("bags/{}.bag", b.slide_id),
                label: b.label,
                split,
            })
            .collect();
        DatasetManifest::new(entries, base_dir)
    }

    pub fn signal_map(&self) -> BTreeMap<String, Vec<bool>> {
        self.bags
            .iter()
            .zip(&self.signal)
            .map(|(b, s)| (b.slide_id.clone(), s.clone()))
            .collect()
    }

    /// Writes `bags/*.bag`, `manifest.json` and `signal.json` under `dir`,
    /// plus `test_manifest.json` with only the test entries when there are any.
    pub fn write(&self, dir: &Path) -> Result<DatasetManifest> {
        for bag in &self.bags {
            bag.write(&dir.join("bags").join(format!("{}.bag", bag.slide_id)))?;
        }
        let manifest = self.manifest(dir)?;
        manifest.save(&dir.join("manifest.json"))?;
        let test: Vec<ManifestEntry> = manifest.with_split(Split::Test).into_iter().cloned().collect();
        if !test.is_empty() {
            DatasetManifest::new(test, dir)?.save(&dir.join("test_manifest.json"))?;
        }
        crate::io::write_atomic(
            &dir.join("signal.json"),
            crate::io::to_stable_json(&self.signal_map())?.as_bytes(),
        )?;
        Ok(manifest)
    }
}

/// Reads a `signal.json` written by [`SyntheticDataset::write`].
pub fn read_signal_map(path: &Path) -> Result<BTreeMap<String, Vec<bool>>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
    Ok(serde_json::from_str(&text)?)
}
