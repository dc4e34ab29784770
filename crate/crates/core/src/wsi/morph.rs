//! Square-element grey-level and binary morphology with edge replication.

use super::mask::BinaryMask;
use super::raster::RasterImage;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MorphOp {
    Erode,
    Dilate,
    Open,
    Close,
    Gradient,
}

fn check_kernel(k: usize) -> Result<()> {
    if k < 3 || k % 2 == 0 {
        return Err(Error::contract(format!("morphology kernel {k} must be odd and >= 3")));
    }
    Ok(())
}

/// Running min/max along one line with clamped (replicated) borders.
fn line_extreme(src: &[u8], stride: usize, len: usize, radius: usize, max: bool, out: &mut [u8]) {
    for i in 0..len {
        let lo = i.saturating_sub(radius);
        let hi = (i + radius).min(len - 1);
        let mut acc = src[lo * stride];
        for j in lo + 1..=hi {
            let v = src[j * stride];
            acc = if max { acc.max(v) } else { acc.min(v) };
        }
        out[i * stride] = acc;
    }
}

fn extreme_filter(data: &[u8], w: usize, h: usize, k: usize, max: bool) -> Vec<u8> {
    if w == 0 || h == 0 {
        return data.to_vec();
    }
    let r = k / 2;
    let mut rows = vec![0u8; data.len()];
    for y in 0..h {
        let s = y * w;
        line_extreme(&data[s..s + w], 1, w, r, max, &mut rows[s..s + w]);
    }
    let mut out = vec![0u8; data.len()];
    for x in 0..w {
        line_extreme(&rows[x..], w, h, r, max, &mut out[x..]);
    }
    out
}

fn apply(data: &[u8], w: usize, h: usize, op: MorphOp, k: usize) -> Vec<u8> {
    match op {
        MorphOp::Erode => extreme_filter(data, w, h, k, false),
        MorphOp::Dilate => extreme_filter(data, w, h, k, true),
        MorphOp::Open => {
            let e = extreme_filter(data, w, h, k, false);
            extreme_filter(&e, w, h, k, true)
        }
        MorphOp::Close => {
            let d = extreme_filter(data, w, h, k, true);
            extreme_filter(&d, w, h, k, false)
        }
        MorphOp::Gradient => {
            let d = extreme_filter(data, w, h, k, true);
            let e = extreme_filter(data, w, h, k, false);
            d.iter().zip(&e).map(|(a, b)| a - b).collect()
        }
    }
}

/// Morphology on a single-channel raster.
pub fn morph_gray(img: &RasterImage, op: MorphOp, k: usize) -> Result<RasterImage> {
    check_kernel(k)?;
    if img.channels != 1 {
        return Err(Error::contract("grey morphology needs a single-channel image"));
    }
    let data = apply(&img.data, img.width, img.height, op, k);
    RasterImage::gray(img.width, img.height, data)
}

/// Morphology on a binary mask; the gradient is `dilate ∧ ¬erode`.
pub fn morph_mask(mask: &BinaryMask, op: MorphOp, k: usize) -> Result<BinaryMask> {
    check_kernel(k)?;
    let bytes: Vec<u8> = mask.bits.iter().map(|&b| b as u8).collect();
    let out = apply(&bytes, mask.width, mask.height, op, k);
    Ok(BinaryMask {
        bits: out.into_iter().map(|v| v != 0).collect(),
        ..mask.clone()
    })
}
