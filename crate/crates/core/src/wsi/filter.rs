//! Separable Gaussian smoothing with border renormalisation.

use super::raster::RasterImage;

/// Unnormalised taps `exp(-k²/2σ²)` for `k ∈ [-r, r]`, `r = ⌈3σ⌉`.
pub fn gaussian_taps(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as isize;
    (-radius..=radius)
        .map(|k| (-((k * k) as f64) / (2.0 * sigma * sigma)).exp())
        .collect()
}

fn blur_line(src: &[f64], stride: usize, len: usize, taps: &[f64], out: &mut [f64]) {
    let radius = (taps.len() / 2) as isize;
    for i in 0..len as isize {
        let lo = (i - radius).max(0);
        let hi = (i + radius).min(len as isize - 1);
        let mut acc = 0.0;
        let mut norm = 0.0;
        for j in lo..=hi {
            let w = taps[(j - i + radius) as usize];
            acc += w * src[j as usize * stride];
            norm += w;
        }
        out[i as usize * stride] = acc / norm;
    }
}

/// Blurs a `width × height` plane of reals: rows first, then columns. Taps that
/// fall outside the plane are dropped and the remaining weights renormalised.
pub fn blur_plane(data: &[f64], width: usize, height: usize, sigma: f64) -> Vec<f64> {
    assert_eq!(data.len(), width * height);
    if sigma <= 0.0 || data.is_empty() {
        return data.to_vec();
    }
    let taps = gaussian_taps(sigma);
    let mut rows = vec![0.0; data.len()];
    for y in 0..height {
        let s = y * width;
        blur_line(&data[s..s + width], 1, width, &taps, &mut rows[s..s + width]);
    }
    let mut out = vec![0.0; data.len()];
    for x in 0..width {
        blur_line(&rows[x..], width, height, &taps, &mut out[x..]);
    }
    out
}

#[inline]
pub(crate) fn round_u8(v: f64) -> u8 {
    (v + 0.5).floor().clamp(0.0, 255.0) as u8
}

/// Per-channel Gaussian blur of an 8-bit raster, rounding half up.
pub fn gaussian_blur(img: &RasterImage, sigma: f64) -> RasterImage {
    let (w, h, ch) = (img.width, img.height, img.channels);
    let mut out = img.clone();
    for c in 0..ch {
        let plane: Vec<f64> = img.data.iter().skip(c).step_by(ch).map(|&v| v as f64).collect();
        let blurred = blur_plane(&plane, w, h, sigma);
        for (i, v) in blurred.into_iter().enumerate() {
            out.data[i * ch + c] = round_u8(v);
        }
    }
    out
}
