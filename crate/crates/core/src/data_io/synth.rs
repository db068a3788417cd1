//! Seeded stand-in for annotated cord images: thin, curved, bright strokes on
//! a noisy dark background.

use std::f64::consts::TAU;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::dataset::{Dataset, Sample};
use crate::error::{Error, Result};
use crate::image::{Image2D, MaskImage, Plane};
use crate::rng::SplitMix64;

const MIN_SIZE: usize = 32;
const FOREGROUND_FRACTION: (f64, f64) = (0.01, 0.30);
const BACKGROUND: (f64, f64) = (60.0, 15.0);
const STROKE: (f64, f64) = (200.0, 20.0);
/// Per-step heading jitter (radians) and slowly varying turn rate.
const HEADING_JITTER: f64 = 0.15;
const TURN_RATE: f64 = 0.04;

/// Stamps a disc of diameter `thickness` at every point of a random walk.
fn draw_stroke(support: &mut [u8], size: usize, rng: &mut SplitMix64) {
    let thickness: u32 = rng.random_range(2..=4);
    let radius = thickness as f64 / 2.0;
    let steps = rng.random_range(size / 2..=size * 3 / 2);
    let (mut x, mut y) = (rng.random::<f64>() * size as f64, rng.random::<f64>() * size as f64);
    let mut heading = rng.random::<f64>() * TAU;
    let jitter = Normal::new(0.0, HEADING_JITTER).expect("valid normal");
    let turn = Normal::new(0.0, TURN_RATE).expect("valid normal").sample(rng);

    let r2 = radius * radius;
    let reach = radius.ceil() as isize;
    for _ in 0..steps {
        let (cx, cy) = (x.floor() as isize, y.floor() as isize);
        for py in cy - reach..=cy + reach {
            for px in cx - reach..=cx + reach {
                if px < 0 || py < 0 || px >= size as isize || py >= size as isize {
                    continue;
                }
                let (dx, dy) = (px as f64 + 0.5 - x, py as f64 + 0.5 - y);
                if dx * dx + dy * dy <= r2 {
                    support[py as usize * size + px as usize] = 1;
                }
            }
        }
        heading += turn + jitter.sample(rng);
        x += heading.cos();
        y += heading.sin();
        if x < 0.0 || y < 0.0 || x >= size as f64 || y >= size as f64 {
            break;
        }
    }
}

/// One `size × size` image/mask pair. Stroke sets are redrawn until the
/// foreground fraction lies in `[0.01, 0.30]`.
pub fn render_sample(size: usize, rng: &mut SplitMix64) -> Result<(Image2D, MaskImage)> {
    if size < MIN_SIZE {
        return Err(Error::Domain(format!("synthetic tiles must be at least {MIN_SIZE} px, got {size}")));
    }
    let total = (size * size) as f64;
    let support = loop {
        let mut support = vec![0u8; size * size];
        for _ in 0..rng.random_range(1..=4) {
            draw_stroke(&mut support, size, rng);
        }
        let fraction = support.iter().filter(|&&v| v == 1).count() as f64 / total;
        if (FOREGROUND_FRACTION.0..=FOREGROUND_FRACTION.1).contains(&fraction) {
            break support;
        }
    };
    let bg = Normal::new(BACKGROUND.0, BACKGROUND.1).expect("valid normal");
    let fg = Normal::new(STROKE.0, STROKE.1).expect("valid normal");
    let pixels = support
        .iter()
        .map(|&s| {
            let v = if s == 1 { fg.sample(rng) } else { bg.sample(rng) };
            v.round().clamp(0.0, 255.0) as u8
        })
        .collect();
    Ok((Plane::new(size, size, pixels)?, MaskImage::new(size, size, support)?))
}

/// `count` samples named `synth_00000`, `synth_00001`, ... Deterministic per
/// `(count, size, seed)`.
pub fn gen_synthetic(count: usize, size: usize, seed: u64) -> Result<Dataset> {
    let mut rng = SplitMix64::new(seed);
    let samples = (0..count)
        .map(|i| {
            let (image, mask) = render_sample(size, &mut rng)?;
            Sample::new(format!("synth_{i:05}"), image, mask)
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(samples)
}
