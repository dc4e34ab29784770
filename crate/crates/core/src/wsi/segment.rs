//! Saturation-channel tissue segmentation.
//!
//! Pipeline: pick the pyramid level nearest the target downsample, blur with a
//! width-adapted sigma, take HSV saturation, threshold it with Otsu, threshold
//! its morphological gradient with Otsu, OR the two masks, close then open,
//! and drop small fragments.

use serde::{Deserialize, Serialize};

use super::color::rgb_to_hsv;
use super::filter::gaussian_blur;
use super::mask::{filter_small_components, BinaryMask};
use super::morph::{morph_gray, morph_mask, MorphOp};
use super::otsu::{histogram, otsu_threshold, OtsuThreshold};
use super::pyramid::{best_level_for_downsample, ImagePyramid};
use super::raster::RasterImage;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentationConfig {
    pub target_downsample: f64,
    /// Blur sigma for a 1024-pixel-wide segmentation level; scaled linearly
    /// with width and clamped to `[0.5, 4]`.
    pub blur_sigma_base: f64,
    pub close_kernel: usize,
    pub open_kernel: usize,
    pub min_component_area_px: usize,
    pub coverage_threshold: f64,
    /// Saturation (0–255) above which a uniformly coloured level is treated as
    /// tissue when the saturation histogram has a single occupied bin.
    pub min_tissue_saturation: u8,
}

impl Default for SegmentationConfig {
    fn default() -> Self {
        Self {
            target_downsample: 32.0,
            blur_sigma_base: 2.0,
            close_kernel: 5,
            open_kernel: 3,
            min_component_area_px: 500,
            coverage_threshold: 0.5,
            min_tissue_saturation: 20,
        }
    }
}

impl SegmentationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.target_downsample > 0.0 && self.blur_sigma_base > 0.0) {
            return Err(Error::Config("downsample and blur sigma must be positive".into()));
        }
        if !(self.coverage_threshold > 0.0 && self.coverage_threshold <= 1.0) {
            return Err(Error::Config("coverage threshold must lie in (0, 1]".into()));
        }
        Ok(())
    }

    pub fn adapted_sigma(&self, level_width: usize) -> f64 {
        (self.blur_sigma_base * level_width as f64 / 1024.0).clamp(0.5, 4.0)
    }
}

#[derive(Clone, Debug)]
pub struct Segmentation {
    pub mask: BinaryMask,
    pub saturation_threshold: OtsuThreshold,
    pub gradient_threshold: OtsuThreshold,
    pub sigma: f64,
    pub warnings: Vec<String>,
}

fn above(img: &RasterImage, t: u8) -> BinaryMask {
    let mut m = BinaryMask::empty(img.width, img.height);
    m.bits = img.data.iter().map(|&v| v > t).collect();
    m
}

pub fn segment_tissue(pyr: &ImagePyramid, cfg: &SegmentationConfig) -> Result<Segmentation> {
    cfg.validate()?;
    let level = best_level_for_downsample(pyr, cfg.target_downsample);
    let view = pyr.level(level);
    let base = pyr.base();
    let sigma = cfg.adapted_sigma(view.width);
    let hsv = rgb_to_hsv(&gaussian_blur(view, sigma))?;
    let sat = hsv.saturation_image();
    let mut warnings = Vec::new();

    let s_thr = otsu_threshold(&histogram(&sat.data))?;
    let m1 = if s_thr.degenerate {
        if s_thr.threshold >= cfg.min_tissue_saturation {
            BinaryMask::full(sat.width, sat.height)
        } else {
            BinaryMask::empty(sat.width, sat.height)
        }
    } else {
        above(&sat, s_thr.threshold)
    };

    let grad = morph_gray(&sat, MorphOp::Gradient, 3)?;
    let g_thr = otsu_threshold(&histogram(&grad.data))?;
    let m2 = if g_thr.degenerate {
        BinaryMask::empty(sat.width, sat.height)
    } else {
        above(&grad, g_thr.threshold)
    };
    if s_thr.degenerate && g_thr.degenerate && m1.count() == 0 {
        warnings.push("saturation and gradient histograms are both single-valued; mask is empty".into());
    }

    let combined = m1.union(&m2)?;
    let closed = morph_mask(&combined, MorphOp::Close, cfg.close_kernel)?;
    let opened = morph_mask(&closed, MorphOp::Open, cfg.open_kernel)?;
    let mask = filter_small_components(&opened, cfg.min_component_area_px)
        .at_level(level, base.width, base.height);
    Ok(Segmentation {
        mask,
        saturation_threshold: s_thr,
        gradient_threshold: g_thr,
        sigma,
        warnings,
    })
}

/// Blends `tint` into masked pixels: `round((1-α)·p + α·tint)`.
pub fn render_mask_overlay(
    img: &RasterImage,
    mask: &BinaryMask,
    tint: [u8; 3],
    alpha: f64,
) -> Result<RasterImage> {
    if (img.width, img.height) != (mask.width, mask.height) {
        return Err(Error::contract(format!(
            "overlay image {}x{} vs mask {}x{}",
            img.width, img.height, mask.width, mask.height
        )));
    }
    if img.channels != 3 {
        return Err(Error::contract("overlay needs an RGB image"));
    }
    let mut out = img.clone();
    for (i, px) in out.data.chunks_exact_mut(3).enumerate() {
        if mask.bits[i] {
            for (p, &t) in px.iter_mut().zip(&tint) {
                *p = super::filter::round_u8((1.0 - alpha) * *p as f64 + alpha * t as f64);
            }
        }
    }
    Ok(out)
}
