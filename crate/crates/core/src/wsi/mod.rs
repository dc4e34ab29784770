//! Slide preprocessing: pyramid emulation, tissue segmentation and patch grids.

pub mod color;
pub mod filter;
pub mod mask;
pub mod morph;
pub mod otsu;
pub mod patches;
pub mod pyramid;
pub mod raster;
pub mod segment;
pub mod synth;

pub use color::{hsv_pixel, rgb_to_hsv, HsvImage};
pub use filter::{gaussian_blur, gaussian_taps};
pub use mask::{filter_small_components, BinaryMask};
pub use morph::{morph_gray, morph_mask, MorphOp};
pub use otsu::{histogram, otsu_threshold, OtsuThreshold};
pub use patches::{extract_patch_grid, footprint_coverage, PatchGrid, DEFAULT_PATCH_SIZE};
pub use pyramid::{best_level_for_downsample, build_pyramid, ImagePyramid};
pub use raster::RasterImage;
pub use segment::{render_mask_overlay, segment_tissue, Segmentation, SegmentationConfig};
pub use synth::{bundled_slide, synthetic_slide, SyntheticSlide};
