use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::bag::FeatureBag;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
    Unassigned,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
            Split::Unassigned => "unassigned",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            "unassigned" => Ok(Split::Unassigned),
            other => Err(Error::Config(format!(
                "unknown split {other:?} (expected train, val, test or unassigned)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub slide_id: String,
    /// Relative paths resolve against the manifest's directory.
    pub bag_path: String,
    pub label: u8,
    pub split: Split,
}

#[derive(Deserialize)]
struct RawEntry {
    slide_id: String,
    bag_path: String,
    label: u8,
    split: String,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
    pub base_dir: PathBuf,
}

impl DatasetManifest {
    pub fn new(entries: Vec<ManifestEntry>, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let m = Self { entries, base_dir: base_dir.into() };
        m.validate()?;
        Ok(m)
    }

    /// Unique ids, labels in range. File existence is checked by [`load_manifest`].
    pub fn validate(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for e in &self.entries {
            if e.label > 2 {
                return Err(Error::Config(format!("slide {}: label {} outside 0..=2", e.slide_id, e.label)));
            }
            if !seen.insert(e.slide_id.as_str()) {
                return Err(Error::Config(format!("duplicate slide_id {:?} in manifest", e.slide_id)));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let raw: Vec<RawEntry> = serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("manifest is not a JSON entry array: {e}")))?;
        let entries = raw
            .into_iter()
            .map(|r| {
                let split = r
                    .split
                    .parse()
                    .map_err(|e| Error::Config(format!("slide {}: {e}", r.slide_id)))?;
                Ok(ManifestEntry { slide_id: r.slide_id, bag_path: r.bag_path, label: r.label, split })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(entries, base_dir)
    }

    pub fn to_json(&self) -> Result<String> {
        crate::io::to_stable_json(&self.entries)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::io::write_atomic(path, self.to_json()?.as_bytes())
    }

    pub fn resolve(&self, entry: &ManifestEntry) -> PathBuf {
        let p = Path::new(&entry.bag_path);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn labels(&self) -> Vec<usize> {
        self.entries.iter().map(|e| e.label as usize).collect()
    }

    pub fn class_counts(&self) -> [usize; 3] {
        let mut c = [0; 3];
        for e in &self.entries {
            c[e.label as usize] += 1;
        }
        c
    }

    pub fn with_split(&self, split: Split) -> Vec<&ManifestEntry> {
        self.entries.iter().filter(|e| e.split == split).collect()
    }

    /// Reads the bag behind `entry` and checks that id and label agree.
    pub fn load_bag(&self, entry: &ManifestEntry) -> Result<FeatureBag> {
        let path = self.resolve(entry);
        let bag = FeatureBag::read(&path)?;
        if bag.slide_id != entry.slide_id || bag.label != entry.label {
            return Err(Error::Config(format!(
                "{}: bag holds ({}, label {}) but manifest says ({}, label {})",
                path.display(),
                bag.slide_id,
                bag.label,
                entry.slide_id,
                entry.label
            )));
        }
        Ok(bag)
    }

    pub fn load_all(&self) -> Result<Vec<FeatureBag>> {
        self.entries.iter().map(|e| self.load_bag(e)).collect()
    }
}

pub fn load_manifest(path: &Path) -> Result<DatasetManifest> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let m = DatasetManifest::from_json(&text, base)?;
    for e in &m.entries {
        let p = m.resolve(e);
        if !p.is_file() {
            return Err(Error::file(
                p,
                std::io::Error::new(std::io::ErrorKind::NotFound, format!("bag for slide {} not found", e.slide_id)),
            ));
        }
    }
    Ok(m)
}
