use super::raster::RasterImage;
use crate::error::{Error, Result};

/// Power-of-two resolution ladder; level `l` has downsample `2^l`.
#[derive(Clone, Debug, PartialEq)]
pub struct ImagePyramid {
    pub levels: Vec<RasterImage>,
}

impl ImagePyramid {
    pub fn downsample(&self, level: usize) -> f64 {
        (1u64 << level) as f64
    }

    pub fn level(&self, level: usize) -> &RasterImage {
        &self.levels[level]
    }

    pub fn base(&self) -> &RasterImage {
        &self.levels[0]
    }
}

/// Halves each dimension (ceil) per level, averaging each 2×2 block over the
/// pixels that exist and rounding half up. Stops early once a level is 1×1.
pub fn build_pyramid(img: &RasterImage, max_levels: usize) -> Result<ImagePyramid> {
    if img.is_empty() {
        return Err(Error::contract("cannot build a pyramid from an empty image"));
    }
    let mut levels = vec![img.clone()];
    while levels.len() < max_levels.max(1) {
        let prev = levels.last().unwrap();
        if prev.width == 1 && prev.height == 1 {
            break;
        }
        levels.push(halve(prev));
    }
    Ok(ImagePyramid { levels })
}

fn halve(src: &RasterImage) -> RasterImage {
    let w = src.width.div_ceil(2);
    let h = src.height.div_ceil(2);
    let ch = src.channels;
    let mut data = Vec::with_capacity(w * h * ch);
    for y in 0..h {
        for x in 0..w {
            for c in 0..ch {
                let mut sum = 0u32;
                let mut count = 0u32;
                for sy in 2 * y..(2 * y + 2).min(src.height) {
                    for sx in 2 * x..(2 * x + 2).min(src.width) {
                        sum += src.pixel(sx, sy)[c] as u32;
                        count += 1;
                    }
                }
                data.push(((2 * sum + count) / (2 * count)) as u8);
            }
        }
    }
    RasterImage {
        width: w,
        height: h,
        channels: ch,
        data,
    }
}

/// Largest level whose downsample factor does not exceed `requested`.
pub fn best_level_for_downsample(pyr: &ImagePyramid, requested: f64) -> usize {
    let mut best = 0;
    for l in 0..pyr.levels.len() {
        if pyr.downsample(l) <= requested {
            best = l;
        }
    }
    best
}
