use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::wsi::filter::blur_plane;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResampleMode {
    /// Blur on the grid, then bilinear upsampling.
    Gaussian,
    Bilinear,
}

impl std::str::FromStr for ResampleMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(Self::Gaussian),
            "bilinear" => Ok(Self::Bilinear),
            other => Err(Error::Config(format!("unknown heatmap mode {other:?}"))),
        }
    }
}

/// Per-patch scores on the level-0 patch lattice, min-max normalised.
#[derive(Clone, Debug, PartialEq)]
pub struct HeatGrid {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
    pub patch_size: usize,
    /// Raw score range before normalisation.
    pub score_min: f64,
    pub score_max: f64,
}

impl HeatGrid {
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }
}

/// Patch cells get their normalised score and empty cells 0. Normalisation is
/// over the patch scores; equal scores all map to 0.5.
pub fn scores_to_grid(
    coords: &[(u32, u32)],
    scores: &[f64],
    image_width: usize,
    image_height: usize,
    patch_size: usize,
) -> Result<HeatGrid> {
    if coords.len() != scores.len() {
        return Err(Error::contract(format!("{} coords for {} scores", coords.len(), scores.len())));
    }
    if patch_size == 0 {
        return Err(Error::contract("patch size must be positive"));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::contract("heatmap scores must be finite"));
    }
    let gw = image_width.div_ceil(patch_size);
    let gh = image_height.div_ceil(patch_size);
    let lo = scores.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut values = vec![0.0; gw * gh];
    for (&(x, y), &s) in coords.iter().zip(scores) {
        let (x, y) = (x as usize, y as usize);
        if x >= image_width || y >= image_height {
            return Err(Error::contract(format!(
                "patch ({x}, {y}) outside {image_width}x{image_height}"
            )));
        }
        values[(y / patch_size) * gw + x / patch_size] = if hi > lo { (s - lo) / (hi - lo) } else { 0.5 };
    }
    Ok(HeatGrid {
        width: gw,
        height: gh,
        values,
        patch_size,
        score_min: if scores.is_empty() { 0.0 } else { lo },
        score_max: if scores.is_empty() { 0.0 } else { hi },
    })
}

/// Source coordinate of output pixel `i` when each cell spans `scale` pixels,
/// with cell centres as nodes.
fn source_coord(i: usize, scale: f64, n: usize) -> (usize, usize, f64) {
    let u = ((i as f64 + 0.5) / scale - 0.5).clamp(0.0, (n - 1) as f64);
    let i0 = u.floor() as usize;
    let i1 = (i0 + 1).min(n - 1);
    (i0, i1, u - i0 as f64)
}

/// Upsamples to `target_w × target_h`, each cell spanning `target/grid` pixels.
pub fn resample_grid(
    grid: &HeatGrid,
    target_w: usize,
    target_h: usize,
    mode: ResampleMode,
    sigma_cells: f64,
) -> Result<Vec<f64>> {
    if target_w < grid.width || target_h < grid.height || grid.width == 0 || grid.height == 0 {
        return Err(Error::contract(format!(
            "target {target_w}x{target_h} smaller than grid {}x{}",
            grid.width, grid.height
        )));
    }
    let src = match mode {
        ResampleMode::Gaussian => blur_plane(&grid.values, grid.width, grid.height, sigma_cells),
        ResampleMode::Bilinear => grid.values.clone(),
    };
    let sx = target_w as f64 / grid.width as f64;
    let sy = target_h as f64 / grid.height as f64;
    let cols: Vec<(usize, usize, f64)> = (0..target_w).map(|x| source_coord(x, sx, grid.width)).collect();
    let mut out = Vec::with_capacity(target_w * target_h);
    for y in 0..target_h {
        let (y0, y1, ty) = source_coord(y, sy, grid.height);
        for &(x0, x1, tx) in &cols {
            let top = src[y0 * grid.width + x0] * (1.0 - tx) + src[y0 * grid.width + x1] * tx;
            let bot = src[y1 * grid.width + x0] * (1.0 - tx) + src[y1 * grid.width + x1] * tx;
            out.push((top * (1.0 - ty) + bot * ty).clamp(0.0, 1.0));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_patch_and_equal_scores() {
        let g = scores_to_grid(&[(0, 0)], &[0.3], 512, 256, 256).unwrap();
        assert_eq!(g.values, vec![0.5, 0.0]);
        let g = scores_to_grid(&[(0, 0), (256, 0)], &[0.2, 0.8], 512, 256, 256).unwrap();
        assert_eq!(g.values, vec![0.0, 1.0]);
        assert!(scores_to_grid(&[(600, 0)], &[1.0], 512, 256, 256).is_err());
    }

    #[test]
    fn bilinear_midpoint() {
        let g = HeatGrid { width: 2, height: 1, values: vec![0.0, 1.0], patch_size: 1, score_min: 0.0, score_max: 1.0 };
        // Cells span 1.5 px; pixel 1's centre sits halfway between the nodes.
        let out = resample_grid(&g, 3, 1, ResampleMode::Bilinear, 1.0).unwrap();
        assert_eq!(out[1], 0.5);
        let out = resample_grid(&g, 2, 1, ResampleMode::Bilinear, 1.0).unwrap();
        assert_eq!(out, vec![0.0, 1.0]);
    }

    #[test]
    fn constant_and_spike() {
        let c = HeatGrid { width: 3, height: 2, values: vec![0.25; 6], patch_size: 1, score_min: 0.0, score_max: 0.0 };
        assert!(resample_grid(&c, 30, 20, ResampleMode::Gaussian, 1.0)
            .unwrap()
            .iter()
            .all(|v| (v - 0.25).abs() < 1e-12));
        let mut values = vec![0.0; 25];
        values[12] = 1.0;
        let s = HeatGrid { width: 5, height: 5, values, patch_size: 1, score_min: 0.0, score_max: 1.0 };
        let out = resample_grid(&s, 25, 25, ResampleMode::Gaussian, 1.0).unwrap();
        let arg = (0..out.len()).max_by(|&a, &b| out[a].total_cmp(&out[b])).unwrap();
        assert_eq!((arg % 25 / 5, arg / 25 / 5), (2, 2));
    }
}
