use std::path::Path;

use serde::{Deserialize, Serialize};

use super::mask::BinaryMask;
use crate::error::{Error, Result};

pub const DEFAULT_PATCH_SIZE: usize = 256;

/// Level-0 top-left corners of retained non-overlapping patches.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PatchGrid {
    pub patch_size: usize,
    pub coords: Vec<(u32, u32)>,
    pub level: usize,
    pub coverage_threshold: f64,
}

impl PatchGrid {
    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    /// One `x y` line per patch.
    pub fn to_text(&self) -> String {
        self.coords.iter().map(|(x, y)| format!("{x} {y}\n")).collect()
    }

    pub fn from_text(text: &str, patch_size: usize) -> Result<Self> {
        let mut coords = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut it = line.split_whitespace().map(str::parse::<u32>);
            match (it.next(), it.next(), it.next()) {
                (Some(Ok(x)), Some(Ok(y)), None) => coords.push((x, y)),
                _ => return Err(Error::Config(format!("coordinate line {}: {line:?}", i + 1))),
            }
        }
        coords.sort_by_key(|&(x, y)| (y, x));
        Ok(Self { patch_size, coords, level: 0, coverage_threshold: 0.0 })
    }

    pub fn write_text(&self, path: &Path) -> Result<()> {
        crate::io::write_atomic(path, self.to_text().as_bytes())
    }
}

/// Fraction of mask pixels set under a level-0 footprint.
pub fn footprint_coverage(mask: &BinaryMask, x: usize, y: usize, size: usize) -> f64 {
    let d = mask.downsample.max(1);
    let x0 = (x / d).min(mask.width);
    let y0 = (y / d).min(mask.height);
    let x1 = (x + size).div_ceil(d).min(mask.width);
    let y1 = (y + size).div_ceil(d).min(mask.height);
    if x1 <= x0 || y1 <= y0 {
        return 0.0;
    }
    let mut hits = 0usize;
    for my in y0..y1 {
        hits += mask.bits[my * mask.width + x0..my * mask.width + x1].iter().filter(|&&b| b).count();
    }
    hits as f64 / ((x1 - x0) * (y1 - y0)) as f64
}

pub fn extract_patch_grid(mask: &BinaryMask, patch_size: usize, coverage_threshold: f64) -> Result<PatchGrid> {
    if patch_size == 0 {
        return Err(Error::contract("patch size must be positive"));
    }
    let mut coords = Vec::new();
    for gy in 0..mask.base_height / patch_size {
        for gx in 0..mask.base_width / patch_size {
            let (x, y) = (gx * patch_size, gy * patch_size);
            if footprint_coverage(mask, x, y, patch_size) >= coverage_threshold {
                coords.push((x as u32, y as u32));
            }
        }
    }
    Ok(PatchGrid { patch_size, coords, level: 0, coverage_threshold })
}
