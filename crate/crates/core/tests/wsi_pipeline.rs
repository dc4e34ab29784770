use pathomil::rng::Rng;
use pathomil::wsi::*;

/// (fraction of tissue covered, fraction of background covered), counted at level 0.
fn agreement(mask: &BinaryMask, truth: &BinaryMask) -> (f64, f64) {
    let d = mask.downsample;
    let (mut tp, mut t, mut fp, mut b) = (0usize, 0usize, 0usize, 0usize);
    for y in 0..truth.height {
        for x in 0..truth.width {
            let m = mask.get((x / d).min(mask.width - 1), (y / d).min(mask.height - 1));
            if truth.get(x, y) {
                t += 1;
                tp += m as usize;
            } else {
                b += 1;
                fp += m as usize;
            }
        }
    }
    (tp as f64 / t as f64, fp as f64 / b as f64)
}

#[test]
fn synthetic_slide_segmentation_matches_ground_truth() {
    for seed in [42, 7] {
        let slide = synthetic_slide(8192, 6144, seed);
        let pyr = build_pyramid(&slide.image, 8).unwrap();
        let seg = segment_tissue(&pyr, &SegmentationConfig::default()).unwrap();
        let (recall, false_pos) = agreement(&seg.mask, &slide.tissue);
        assert!(recall >= 0.95, "seed {seed}: recall {recall}");
        assert!(false_pos <= 0.05, "seed {seed}: background {false_pos}");

        let grid = extract_patch_grid(&seg.mask, 256, 0.5).unwrap();
        assert!(!grid.is_empty());
        for &(x, y) in &grid.coords {
            assert!(footprint_coverage(&seg.mask, x as usize, y as usize, 256) >= 0.5);
            assert!(x as usize + 256 <= 8192 && y as usize + 256 <= 6144);
        }
        let again = segment_tissue(&pyr, &SegmentationConfig::default()).unwrap();
        assert_eq!(again.mask, seg.mask);
    }
}

#[test]
fn component_filter_never_grows_mask() {
    let mut rng = Rng::new(3);
    for _ in 0..40 {
        let mut m = BinaryMask::empty(40, 30);
        m.bits.iter_mut().for_each(|b| *b = rng.next_f64() < 0.3);
        let area = rng.below(50) as usize;
        let f = filter_small_components(&m, area);
        assert!(f.bits.iter().zip(&m.bits).all(|(a, b)| !a || *b));
    }
}

#[test]
fn grid_patches_are_disjoint_and_in_bounds() {
    let mut rng = Rng::new(11);
    for _ in 0..20 {
        let (w, h) = (8 + rng.below(10) as usize, 8 + rng.below(10) as usize);
        let mut m = BinaryMask::empty(w, h);
        m.bits.iter_mut().for_each(|b| *b = rng.next_f64() < 0.6);
        let m = m.at_level(4, w * 16 + rng.below(16) as usize, h * 16);
        let thr = rng.uniform(0.1, 0.9);
        let g = extract_patch_grid(&m, 32, thr).unwrap();
        let mut seen = std::collections::HashSet::new();
        for &(x, y) in &g.coords {
            assert_eq!((x % 32, y % 32), (0, 0));
            assert!(seen.insert((x, y)));
            assert!(x as usize + 32 <= m.base_width && y as usize + 32 <= m.base_height);
            assert!(footprint_coverage(&m, x as usize, y as usize, 32) >= thr);
        }
        let mut sorted = g.coords.clone();
        sorted.sort_by_key(|&(x, y)| (y, x));
        assert_eq!(sorted, g.coords);
    }
}
