use crate::error::{Error, Result};
use crate::wsi::filter::round_u8;
use crate::wsi::RasterImage;

const JET: [(f64, [f64; 3]); 6] = [
    (0.0, [0.0, 0.0, 0.5]),
    (0.125, [0.0, 0.0, 1.0]),
    (0.375, [0.0, 1.0, 1.0]),
    (0.625, [1.0, 1.0, 0.0]),
    (0.875, [1.0, 0.0, 0.0]),
    (1.0, [0.5, 0.0, 0.0]),
];

pub fn jet_color(v: f64) -> [u8; 3] {
    let v = if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
    let k = JET.iter().rposition(|(a, _)| *a <= v).unwrap_or(0).min(JET.len() - 2);
    let (a, ca) = JET[k];
    let (b, cb) = JET[k + 1];
    let t = (v - a) / (b - a);
    let mut out = [0u8; 3];
    for c in 0..3 {
        out[c] = round_u8(255.0 * (ca[c] + t * (cb[c] - ca[c])));
    }
    out
}

pub fn heat_to_rgb(heat: &[f64], width: usize, height: usize) -> Result<RasterImage> {
    if heat.len() != width * height {
        return Err(Error::contract("heat plane size mismatch"));
    }
    let data = heat.iter().flat_map(|&v| jet_color(v)).collect();
    RasterImage::new(width, height, 3, data)
}

/// `round((1-α)·slide + α·heat)` per channel.
pub fn overlay_heatmap(slide: &RasterImage, heat: &RasterImage, alpha: f64) -> Result<RasterImage> {
    if (slide.width, slide.height, slide.channels) != (heat.width, heat.height, heat.channels) {
        return Err(Error::contract(format!(
            "overlay {}x{}x{} vs heat {}x{}x{}",
            slide.width, slide.height, slide.channels, heat.width, heat.height, heat.channels
        )));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Config(format!("alpha {alpha} outside [0, 1]")));
    }
    let data = slide
        .data
        .iter()
        .zip(&heat.data)
        .map(|(&s, &h)| round_u8((1.0 - alpha) * s as f64 + alpha * h as f64))
        .collect();
    RasterImage::new(slide.width, slide.height, slide.channels, data)
}
