mod common;

use cordseg_core::rng::SplitMix64;
use cordseg_core::tiling::{compute_grid, pad_image, predict_frame, split_image, stitch};
use cordseg_core::{Image2D, Params, Plane, UNetConfig};
use proptest::prelude::*;
use rand::{Rng, RngCore};

fn random_frame(rng: &mut SplitMix64, w: usize, h: usize) -> Image2D {
    let mut data = vec![0u8; w * h];
    rng.fill_bytes(&mut data);
    Image2D::new(w, h, data).unwrap()
}

fn round_trip(img: &Image2D, tile: usize) -> Image2D {
    let grid = compute_grid(img.width(), img.height(), tile).unwrap();
    let tiles = split_image(&pad_image(img, &grid).unwrap(), &grid).unwrap();
    assert_eq!(tiles.len(), grid.cols * grid.rows);
    stitch(&tiles, &grid).unwrap()
}

#[test]
fn full_frame_geometry() {
    let grid = compute_grid(3840, 2700, 256).unwrap();
    assert_eq!((grid.cols, grid.rows, grid.tile_count()), (15, 11, 165));
    assert_eq!((grid.padded_width(), grid.padded_height()), (3840, 2816));

    let img = random_frame(&mut SplitMix64::new(1), 3840, 2700);
    let padded = pad_image(&img, &grid).unwrap();
    // Reflection without repeating the edge row.
    assert_eq!(padded.row(2700), img.row(2698));
    assert_eq!(padded.row(2815), img.row(2700 - 116 - 1));
    assert_eq!(round_trip(&img, 256), img);
}

#[test]
fn round_trip_fifty_frames() {
    let mut rng = SplitMix64::new(2);
    for _ in 0..49 {
        let tile = rng.random_range(1..=64);
        let w = rng.random_range(tile..=300);
        let h = rng.random_range(tile..=300);
        let img = random_frame(&mut rng, w, h);
        assert_eq!(round_trip(&img, tile), img, "{w}x{h} tile {tile}");
    }
}

#[test]
fn predicted_mask_matches_frame_size() {
    let p = Params::init(UNetConfig::new(2, 2), 1).unwrap();
    let img = random_frame(&mut SplitMix64::new(3), 45, 37);
    let pred = predict_frame(&p, &img, 16, 0.5).unwrap();
    assert_eq!(pred.mask.dims(), (45, 37));
    assert_eq!(pred.probabilities.dims(), (45, 37));
    assert_eq!(pred.grid.tile_count(), 9);
}

#[test]
fn prediction_is_independent_of_thread_count() {
    let p = Params::init(UNetConfig::new(2, 4), 1).unwrap();
    let img = random_frame(&mut SplitMix64::new(4), 70, 50);
    let run = |threads| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| predict_frame(&p, &img, 32, 0.5).unwrap())
    };
    let (a, b) = (run(1), run(4));
    assert_eq!(a.mask, b.mask);
    assert!(a.probabilities.data().iter().zip(b.probabilities.data()).all(|(x, y)| x.to_bits() == y.to_bits()));
}

#[test]
fn threshold_zero_is_all_foreground() {
    let p = Params::init(UNetConfig::new(1, 2), 1).unwrap();
    let img = random_frame(&mut SplitMix64::new(5), 20, 20);
    let pred = predict_frame(&p, &img, 8, 0.0).unwrap();
    assert_eq!(pred.mask.foreground(), 400);
}

#[test]
fn tile_must_suit_depth() {
    let p = Params::init(UNetConfig::new(3, 1), 1).unwrap();
    let img = random_frame(&mut SplitMix64::new(6), 64, 64);
    let err = predict_frame(&p, &img, 12, 0.5).unwrap_err().to_string();
    assert!(err.contains("8"), "{err}");
}

proptest! {
    #[test]
    fn split_stitch_identity(tile in 1usize..40, dw in 0usize..90, dh in 0usize..90, seed in any::<u64>()) {
        let img = random_frame(&mut SplitMix64::new(seed), tile + dw, tile + dh);
        prop_assert_eq!(round_trip(&img, tile), img);
    }

    #[test]
    fn tiles_cover_padded_frame_once(tile in 1usize..30, dw in 0usize..60, dh in 0usize..60) {
        let (w, h) = (tile + dw, tile + dh);
        let grid = compute_grid(w, h, tile).unwrap();
        let (pw, ph) = (grid.padded_width(), grid.padded_height());
        let coords = Plane::from_fn(pw, ph, |x, y| (y * pw + x) as u32).unwrap();
        let mut count = vec![0u32; pw * ph];
        for t in split_image(&coords, &grid).unwrap() {
            for &i in t.data() {
                count[i as usize] += 1;
            }
        }
        prop_assert!(count.iter().all(|&c| c == 1));
    }

    #[test]
    fn grid_arithmetic(w in 1usize..5000, h in 1usize..5000, tile in 1usize..600) {
        let g = compute_grid(w, h, tile).unwrap();
        prop_assert!(g.cols * tile >= w && (g.cols - 1) * tile < w);
        prop_assert!(g.rows * tile >= h && (g.rows - 1) * tile < h);
    }
}
