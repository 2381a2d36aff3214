use frontkit::grid::Grid;
use frontkit::tiling::{
    extract_patches, longest_side_dims, merge_patches, resize_nearest, tile_weight, PadPolicy, TileSpec, Weighting,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const WEIGHTINGS: [Weighting; 3] = [Weighting::Uniform, Weighting::Gaussian(None), Weighting::Gaussian(Some(3.0))];

#[test]
fn merge_of_extract_is_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for i in 0..20 {
        let w = rng.gen_range(5..140);
        let h = rng.gen_range(5..140);
        let img = Grid::from_fn(w, h, |_, _| rng.gen_range(-1e3..1e3));
        let patch = rng.gen_range(2..64);
        let overlap = rng.gen_range(0..patch);
        let pad = if i % 2 == 0 { PadPolicy::ZeroPad } else { PadPolicy::ClampToEdge };
        let tiles = extract_patches(&img, &TileSpec::square(patch, overlap, pad)).unwrap();
        for weighting in WEIGHTINGS {
            assert_eq!(merge_patches(&tiles, (w, h), weighting).unwrap(), img);
        }
    }
}

#[test]
fn constant_tiles_merge_exactly() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..20 {
        let v: f64 = rng.gen_range(-10.0..10.0);
        let img = Grid::filled(97, 61, v);
        let tiles = extract_patches(&img, &TileSpec::square(32, 12, PadPolicy::ClampToEdge)).unwrap();
        for weighting in WEIGHTINGS {
            let merged = merge_patches(&tiles, (97, 61), weighting).unwrap();
            assert!(merged.as_slice().iter().all(|&x| (x - v).abs() <= 1e-12));
        }
    }
}

#[test]
fn half_overlap_blend_matches_weight_formula() {
    // two 8x8 tiles overlapping by 4 columns with values 0 and 1
    let left = frontkit::tiling::Tile { origin: (0, 0), data: Grid::filled(8, 8, 0.0) };
    let right = frontkit::tiling::Tile { origin: (0, 4), data: Grid::filled(8, 8, 1.0) };
    let w = Weighting::Gaussian(None);
    let merged = merge_patches(&[left, right], (12, 8), w).unwrap();
    for r in 0..8 {
        for c in 4..8 {
            let w0 = tile_weight(w, 8, 8, r, c);
            let w1 = tile_weight(w, 8, 8, r, c - 4);
            assert!((merged.at(r, c) - w1 / (w0 + w1)).abs() < 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn tiles_cover_the_canvas(w in 1usize..300, h in 1usize..300, patch in 1usize..128, ov in 0usize..127) {
        let overlap = ov % patch;
        let img = Grid::filled(w, h, 0.0);
        let tiles = extract_patches(&img, &TileSpec::square(patch, overlap, PadPolicy::ZeroPad)).unwrap();
        let mut covered = Grid::filled(w, h, false);
        for t in &tiles {
            prop_assert!(t.origin.0 < h && t.origin.1 < w);
            for r in t.origin.0..(t.origin.0 + patch).min(h) {
                for c in t.origin.1..(t.origin.1 + patch).min(w) {
                    covered.set(r, c, true);
                }
            }
        }
        prop_assert!(covered.as_slice().iter().all(|&b| b));
    }

    #[test]
    fn longest_side_resize_keeps_aspect(w in 1usize..4000, h in 1usize..4000, target in 1usize..1500) {
        let (ow, oh) = longest_side_dims(w, h, target);
        prop_assert_eq!(ow.max(oh), target);
        let want = w.min(h) as f64 * target as f64 / w.max(h) as f64;
        prop_assert!((ow.min(oh) as f64 - want).abs() <= 0.5 + 1e-9 || ow.min(oh) == 1);
    }

    #[test]
    fn nearest_resize_keeps_label_set(w in 2usize..60, h in 2usize..60, target in 2usize..90, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let img = Grid::from_fn(w, h, |_, _| rng.gen_range(0u8..4));
        let out = resize_nearest(&img, target).unwrap();
        prop_assert!(out.as_slice().iter().all(|v| img.as_slice().contains(v)));
    }
}
