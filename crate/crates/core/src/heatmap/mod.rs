//! Attention heatmaps: patch scores → grid → smoothing/upsampling → jet → overlay.

pub mod color;
pub mod grid;

use serde::{Deserialize, Serialize};

pub use color::{heat_to_rgb, jet_color, overlay_heatmap};
pub use grid::{resample_grid, scores_to_grid, HeatGrid, ResampleMode};

use crate::error::{Error, Result};
use crate::wsi::{ImagePyramid, RasterImage};

/// Longest side of a rendered overlay.
pub const MAX_RENDER_SIDE: usize = 4096;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OverlayConfig {
    pub alpha: f64,
    pub mode: ResampleMode,
    pub sigma_cells: f64,
    /// ABMIL attention row; the predicted class when absent.
    pub class_index: Option<usize>,
}

impl Default for OverlayConfig {
    fn default() -> Self {
        Self { alpha: 0.4, mode: ResampleMode::Gaussian, sigma_cells: 1.0, class_index: None }
    }
}

#[derive(Clone, Debug)]
pub struct HeatmapRender {
    pub overlay: RasterImage,
    pub heat: RasterImage,
    pub level: usize,
    pub downsample: usize,
    pub grid: HeatGrid,
}

impl HeatmapRender {
    pub fn metadata_line(&self) -> String {
        format!(
            "pathomil heatmap level={} downsample={} score_min={} score_max={}",
            self.level, self.downsample, self.grid.score_min, self.grid.score_max
        )
    }

    pub fn side_text(&self) -> String {
        format!(
            "score_min {}\nscore_max {}\nlevel {}\ndownsample {}\n",
            self.grid.score_min, self.grid.score_max, self.level, self.downsample
        )
    }
}

/// First pyramid level whose longer side fits [`MAX_RENDER_SIDE`].
pub fn render_level(pyr: &ImagePyramid) -> usize {
    (0..pyr.levels.len())
        .find(|&l| pyr.level(l).width.max(pyr.level(l).height) <= MAX_RENDER_SIDE)
        .unwrap_or(pyr.levels.len() - 1)
}

pub fn render_heatmap(
    pyr: &ImagePyramid,
    coords: &[(u32, u32)],
    scores: &[f64],
    patch_size: usize,
    cfg: &OverlayConfig,
) -> Result<HeatmapRender> {
    let base = pyr.base();
    let grid = scores_to_grid(coords, scores, base.width, base.height, patch_size)?;
    let level = render_level(pyr);
    let d = 1usize << level;
    if patch_size % d != 0 {
        return Err(Error::contract(format!("patch size {patch_size} not divisible by render downsample {d}")));
    }
    let view = pyr.level(level);
    let cell = patch_size / d;
    // Render over the whole lattice, then crop to the level image.
    let (cw, ch) = (grid.width * cell, grid.height * cell);
    let plane = resample_grid(&grid, cw, ch, cfg.mode, cfg.sigma_cells)?;
    let mut cropped = Vec::with_capacity(view.width * view.height);
    for y in 0..view.height {
        cropped.extend_from_slice(&plane[y * cw..y * cw + view.width]);
    }
    let heat = heat_to_rgb(&cropped, view.width, view.height)?;
    let overlay = overlay_heatmap(view, &heat, cfg.alpha)?;
    Ok(HeatmapRender { overlay, heat, level, downsample: d, grid })
}
