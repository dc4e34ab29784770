//! 30-value colour/texture descriptor per patch.
//!
//! Layout: H histogram (8), S histogram (8), V histogram (8), mean S, std S,
//! mean V, std V, mean morphological gradient of V, tissue fraction.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::nn::DenseMatrix;
use crate::wsi::{morph_gray, rgb_to_hsv, MorphOp, PatchGrid, RasterImage};

pub const HANDCRAFTED_DIM: usize = 30;
const BINS: usize = 8;
/// Saturation (0–255) above which a pixel counts as tissue.
pub const TISSUE_SATURATION: u8 = 20;

pub fn describe_patch(patch: &RasterImage) -> Result<[f64; HANDCRAFTED_DIM]> {
    let hsv = rgb_to_hsv(patch)?;
    let n = hsv.hue.len();
    if n == 0 {
        return Err(Error::contract("empty patch"));
    }
    let inv = 1.0 / n as f64;
    let mut out = [0.0; HANDCRAFTED_DIM];
    let mut counts = [0usize; 3 * BINS];
    for i in 0..n {
        let hb = ((hsv.hue[i] / 360.0 * BINS as f64) as usize).min(BINS - 1);
        counts[hb] += 1;
        counts[BINS + (hsv.saturation[i] as usize >> 5)] += 1;
        counts[2 * BINS + (hsv.value[i] as usize >> 5)] += 1;
    }
    for (o, &c) in out.iter_mut().zip(&counts) {
        *o = c as f64 / n as f64;
    }
    // Integer sums keep constant planes at exactly zero spread.
    let moments = |plane: &[u8]| {
        let s: u64 = plane.iter().map(|&v| v as u64).sum();
        let q: u64 = plane.iter().map(|&v| (v as u64) * (v as u64)).sum();
        let nn = n as u128;
        let var_num = nn * q as u128 - (s as u128) * (s as u128);
        let mean = s as f64 * inv / 255.0;
        let std = (var_num as f64).sqrt() * inv / 255.0;
        (mean, std)
    };
    let (ms, ss) = moments(&hsv.saturation);
    let (mv, sv) = moments(&hsv.value);
    out[24] = ms;
    out[25] = ss;
    out[26] = mv;
    out[27] = sv;
    out[28] = if patch.width >= 1 && patch.height >= 1 {
        let g = morph_gray(&hsv.value_image(), MorphOp::Gradient, 3)?;
        g.data.iter().map(|&v| v as f64).sum::<f64>() * inv / 255.0
    } else {
        0.0
    };
    out[29] = hsv.saturation.iter().filter(|&&s| s > TISSUE_SATURATION).count() as f64 * inv;
    Ok(out)
}

pub fn handcrafted_patch_features(img: &RasterImage, grid: &PatchGrid) -> Result<DenseMatrix> {
    let p = grid.patch_size;
    let rows: Vec<[f64; HANDCRAFTED_DIM]> = grid
        .coords
        .par_iter()
        .map(|&(x, y)| describe_patch(&img.crop(x as usize, y as usize, p, p)?))
        .collect::<Result<_>>()?;
    let mut m = DenseMatrix::zeros(rows.len(), HANDCRAFTED_DIM);
    for (i, r) in rows.iter().enumerate() {
        m.row_mut(i).copy_from_slice(r);
    }
    Ok(m)
}
