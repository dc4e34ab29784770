//! Deterministic synthetic slide: pale background with stained elliptical
//! tissue blobs, nuclei speckle and a few tiny debris specks.

use super::mask::BinaryMask;
use super::raster::RasterImage;
use crate::rng::Rng;

#[derive(Clone, Debug)]
pub struct SyntheticSlide {
    pub image: RasterImage,
    /// Level-0 ground truth of painted tissue (debris excluded).
    pub tissue: BinaryMask,
}

struct Ellipse {
    cx: f64,
    cy: f64,
    rx: f64,
    ry: f64,
    cos: f64,
    sin: f64,
}

impl Ellipse {
    fn contains(&self, x: f64, y: f64) -> bool {
        let (dx, dy) = (x - self.cx, y - self.cy);
        let u = (dx * self.cos + dy * self.sin) / self.rx;
        let v = (-dx * self.sin + dy * self.cos) / self.ry;
        u * u + v * v <= 1.0
    }
}

fn clamp_u8(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

pub const BUNDLED_SLIDE_WIDTH: usize = 8192;
pub const BUNDLED_SLIDE_HEIGHT: usize = 6144;
pub const BUNDLED_SLIDE_SEED: u64 = 42;

/// The reference slide used by the end-to-end checks.
pub fn bundled_slide() -> SyntheticSlide {
    synthetic_slide(BUNDLED_SLIDE_WIDTH, BUNDLED_SLIDE_HEIGHT, BUNDLED_SLIDE_SEED)
}

pub fn synthetic_slide(width: usize, height: usize, seed: u64) -> SyntheticSlide {
    let mut rng = Rng::new(seed);
    let short = width.min(height) as f64;
    let n_blobs = 3 + rng.below(2) as usize;
    let mut blobs = Vec::with_capacity(n_blobs);
    for i in 0..n_blobs {
        // Spread centres over a horizontal band of cells to limit overlap.
        let cell_w = width as f64 / n_blobs as f64;
        let angle = rng.uniform(0.0, std::f64::consts::PI);
        let rx = short * rng.uniform(0.14, 0.22);
        let ry = short * rng.uniform(0.10, 0.16);
        blobs.push(Ellipse {
            cx: cell_w * (i as f64 + 0.5) + rng.uniform(-0.1, 0.1) * cell_w,
            cy: height as f64 * rng.uniform(0.35, 0.65),
            rx: rx.min(cell_w * 0.48),
            ry: ry.min(cell_w * 0.48),
            cos: angle.cos(),
            sin: angle.sin(),
        });
    }
    let debris: Vec<(f64, f64)> = (0..6)
        .map(|_| (rng.uniform(0.0, width as f64), rng.uniform(0.0, height as f64 * 0.12)))
        .collect();

    let mut image = RasterImage::filled(width, height, &[0, 0, 0]);
    let mut tissue = BinaryMask::empty(width, height);
    for y in 0..height {
        for x in 0..width {
            let (fx, fy) = (x as f64 + 0.5, y as f64 + 0.5);
            let inside = blobs.iter().any(|b| b.contains(fx, fy));
            let px = if inside {
                tissue.set(x, y, true);
                if rng.next_f64() < 0.04 {
                    // nucleus
                    [110.0, 60.0, 150.0]
                } else {
                    [222.0, 135.0, 190.0]
                }
            } else if debris.iter().any(|&(dx, dy)| (fx - dx).abs() < 6.0 && (fy - dy).abs() < 6.0) {
                [150.0, 90.0, 130.0]
            } else {
                [242.0, 240.0, 244.0]
            };
            let n = rng.gaussian() * 4.0;
            image.pixel_mut(x, y).copy_from_slice(&[
                clamp_u8(px[0] + n),
                clamp_u8(px[1] + n),
                clamp_u8(px[2] + n),
            ]);
        }
    }
    SyntheticSlide { image, tissue }
}
