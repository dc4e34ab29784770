use super::raster::RasterImage;
use crate::error::{Error, Result};

/// HSV planes: hue in degrees `[0, 360)`, saturation and value as 8-bit
/// (`round(255·S)` and `max(R, G, B)` respectively).
#[derive(Clone, Debug, PartialEq)]
pub struct HsvImage {
    pub width: usize,
    pub height: usize,
    pub hue: Vec<f64>,
    pub saturation: Vec<u8>,
    pub value: Vec<u8>,
}

impl HsvImage {
    pub fn saturation_image(&self) -> RasterImage {
        RasterImage::gray(self.width, self.height, self.saturation.clone()).expect("plane size")
    }

    pub fn value_image(&self) -> RasterImage {
        RasterImage::gray(self.width, self.height, self.value.clone()).expect("plane size")
    }
}

/// Hexagonal HSV of one RGB pixel: `(hue°, saturation ∈ [0,1], value ∈ [0,1])`.
pub fn hsv_pixel(r: u8, g: u8, b: u8) -> (f64, f64, f64) {
    let (rf, gf, bf) = (r as f64, g as f64, b as f64);
    let max = rf.max(gf).max(bf);
    let min = rf.min(gf).min(bf);
    let delta = max - min;
    let s = if max == 0.0 { 0.0 } else { delta / max };
    let h = if delta == 0.0 {
        0.0
    } else if max == rf {
        60.0 * ((gf - bf) / delta).rem_euclid(6.0)
    } else if max == gf {
        60.0 * ((bf - rf) / delta + 2.0)
    } else {
        60.0 * ((rf - gf) / delta + 4.0)
    };
    (if h >= 360.0 { h - 360.0 } else { h }, s, max / 255.0)
}

pub fn rgb_to_hsv(img: &RasterImage) -> Result<HsvImage> {
    if img.channels != 3 {
        return Err(Error::contract("HSV conversion needs an RGB image"));
    }
    let n = img.width * img.height;
    let mut hue = Vec::with_capacity(n);
    let mut saturation = Vec::with_capacity(n);
    let mut value = Vec::with_capacity(n);
    for px in img.data.chunks_exact(3) {
        let (h, s, _) = hsv_pixel(px[0], px[1], px[2]);
        hue.push(h);
        saturation.push(super::filter::round_u8(255.0 * s));
        value.push(px[0].max(px[1]).max(px[2]));
    }
    Ok(HsvImage {
        width: img.width,
        height: img.height,
        hue,
        saturation,
        value,
    })
}
