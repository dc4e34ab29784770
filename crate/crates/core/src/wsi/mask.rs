use std::collections::VecDeque;

use super::raster::RasterImage;
use crate::error::{Error, Result};

/// Tissue mask at one pyramid level.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinaryMask {
    pub width: usize,
    pub height: usize,
    pub bits: Vec<bool>,
    pub level: usize,
    /// Level-0 pixels per mask pixel along each axis.
    pub downsample: usize,
    pub base_width: usize,
    pub base_height: usize,
    pub min_area_applied: bool,
}

impl BinaryMask {
    /// All-background mask at level 0.
    pub fn empty(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            bits: vec![false; width * height],
            level: 0,
            downsample: 1,
            base_width: width,
            base_height: height,
            min_area_applied: false,
        }
    }

    pub fn full(width: usize, height: usize) -> Self {
        let mut m = Self::empty(width, height);
        m.bits.fill(true);
        m
    }

    /// Re-labels the mask as living at `level` of a pyramid with the given base size.
    pub fn at_level(mut self, level: usize, base_width: usize, base_height: usize) -> Self {
        self.level = level;
        self.downsample = 1 << level;
        self.base_width = base_width;
        self.base_height = base_height;
        self
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: bool) {
        self.bits[y * self.width + x] = v;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn coverage(&self) -> f64 {
        if self.bits.is_empty() {
            0.0
        } else {
            self.count() as f64 / self.bits.len() as f64
        }
    }

    pub fn complement(&self) -> Self {
        Self {
            bits: self.bits.iter().map(|b| !b).collect(),
            ..self.clone()
        }
    }

    pub fn union(&self, other: &BinaryMask) -> Result<Self> {
        if (self.width, self.height) != (other.width, other.height) {
            return Err(Error::contract("mask union of different sizes"));
        }
        Ok(Self {
            bits: self.bits.iter().zip(&other.bits).map(|(a, b)| *a || *b).collect(),
            ..self.clone()
        })
    }

    pub fn from_predicate(width: usize, height: usize, f: impl Fn(usize, usize) -> bool) -> Self {
        let mut m = Self::empty(width, height);
        for y in 0..height {
            for x in 0..width {
                m.bits[y * width + x] = f(x, y);
            }
        }
        m
    }

    /// 0/255 grey raster.
    pub fn to_image(&self) -> RasterImage {
        let data = self.bits.iter().map(|&b| if b { 255 } else { 0 }).collect();
        RasterImage::gray(self.width, self.height, data).expect("mask size")
    }

    /// Non-zero pixels of a grey raster become foreground.
    pub fn from_image(img: &RasterImage) -> Result<Self> {
        if img.channels != 1 {
            return Err(Error::contract("mask images must be single-channel"));
        }
        let mut m = Self::empty(img.width, img.height);
        m.bits = img.data.iter().map(|&v| v != 0).collect();
        Ok(m)
    }
}

/// Removes 8-connected components smaller than `min_area` pixels.
pub fn filter_small_components(mask: &BinaryMask, min_area: usize) -> BinaryMask {
    let mut out = mask.clone();
    out.min_area_applied = true;
    if min_area == 0 {
        return out;
    }
    let (w, h) = (mask.width, mask.height);
    let mut seen = vec![false; w * h];
    let mut queue = VecDeque::new();
    let mut component = Vec::new();
    for start in 0..w * h {
        if !mask.bits[start] || seen[start] {
            continue;
        }
        component.clear();
        seen[start] = true;
        queue.push_back(start);
        while let Some(i) = queue.pop_front() {
            component.push(i);
            let (x, y) = ((i % w) as isize, (i / w) as isize);
            for dy in -1..=1 {
                for dx in -1..=1 {
                    let (nx, ny) = (x + dx, y + dy);
                    if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                        continue;
                    }
                    let j = ny as usize * w + nx as usize;
                    if mask.bits[j] && !seen[j] {
                        seen[j] = true;
                        queue.push_back(j);
                    }
                }
            }
        }
        if component.len() < min_area {
            for &i in &component {
                out.bits[i] = false;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tiny_blob_removed() {
        let mut m = BinaryMask::empty(6, 6);
        m.set(1, 1, true);
        m.set(2, 2, true);
        m.set(3, 3, true);
        assert_eq!(filter_small_components(&m, 4).count(), 0);
        assert_eq!(filter_small_components(&m, 3).count(), 3);
        assert_eq!(filter_small_components(&m, 0).bits, m.bits);
    }

    #[test]
    fn keeps_only_large_blob() {
        let m = BinaryMask::from_predicate(60, 40, |x, y| {
            (x < 2 && y < 5) || (x >= 20 && x < 50 && y >= 10 && y < 30)
        });
        let f = filter_small_components(&m, 500);
        assert_eq!(f.count(), 600);
        assert!(!f.get(0, 0) && f.get(20, 10));
    }

    #[test]
    fn diagonal_neighbours_connect() {
        let m = BinaryMask::from_predicate(4, 4, |x, y| x == y);
        assert_eq!(filter_small_components(&m, 4).count(), 4);
    }
}
