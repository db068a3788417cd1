//! Naive reference implementations shared by the integration tests. Written
//! directly from the operator definitions, with no shared code paths.
#![allow(dead_code)]

use std::collections::BTreeSet;

use cordseg_core::kernels::ConvParams;
use cordseg_core::rng::SplitMix64;
use cordseg_core::{MaskImage, Shape4, Tensor4};
use rand::Rng;

pub fn random_tensor(rng: &mut SplitMix64, shape: Shape4) -> Tensor4<f32> {
    let data = (0..shape.len()).map(|_| rng.random_range(-1.0f32..1.0)).collect();
    Tensor4::from_vec(shape, data).unwrap()
}

pub fn random_conv(rng: &mut SplitMix64, c_in: usize, c_out: usize, k: usize) -> ConvParams<f32> {
    let w = random_tensor(rng, Shape4::new(c_out, c_in, k, k));
    let b = (0..c_out).map(|_| rng.random_range(-1.0f32..1.0)).collect();
    ConvParams::conv(w, b).unwrap()
}

pub fn random_upconv(rng: &mut SplitMix64, c_in: usize, c_out: usize) -> ConvParams<f32> {
    let w = random_tensor(rng, Shape4::new(c_in, c_out, 2, 2));
    let b = (0..c_out).map(|_| rng.random_range(-1.0f32..1.0)).collect();
    ConvParams::upconv(w, b).unwrap()
}

/// Same-padded cross-correlation, six nested loops, f64 accumulation.
pub fn naive_conv2d(x: &Tensor4<f32>, p: &ConvParams<f32>) -> Vec<f64> {
    let s = x.shape();
    let k = p.weights.shape();
    let (pad_y, pad_x) = (k.h as isize / 2, k.w as isize / 2);
    let mut out = vec![0.0f64; s.n * k.n * s.h * s.w];
    for n in 0..s.n {
        for co in 0..k.n {
            for y in 0..s.h {
                for x_ in 0..s.w {
                    let mut acc = p.bias[co] as f64;
                    for ci in 0..s.c {
                        for ky in 0..k.h {
                            for kx in 0..k.w {
                                let sy = y as isize + ky as isize - pad_y;
                                let sx = x_ as isize + kx as isize - pad_x;
                                if sy < 0 || sx < 0 || sy >= s.h as isize || sx >= s.w as isize {
                                    continue;
                                }
                                acc += *p.weights.at(co, ci, ky, kx) as f64 * *x.at(n, ci, sy as usize, sx as usize) as f64;
                            }
                        }
                    }
                    out[((n * k.n + co) * s.h + y) * s.w + x_] = acc;
                }
            }
        }
    }
    out
}

/// Transposed convolution as a gather: output (y, x) reads input
/// (y/2, x/2) through kernel tap (y%2, x%2).
pub fn naive_upconv2(x: &Tensor4<f32>, p: &ConvParams<f32>) -> Vec<f64> {
    let s = x.shape();
    let c_out = p.weights.shape().c;
    let (h2, w2) = (2 * s.h, 2 * s.w);
    let mut out = vec![0.0f64; s.n * c_out * h2 * w2];
    for n in 0..s.n {
        for co in 0..c_out {
            for y in 0..h2 {
                for x_ in 0..w2 {
                    let mut acc = p.bias[co] as f64;
                    for ci in 0..s.c {
                        acc += *x.at(n, ci, y / 2, x_ / 2) as f64 * *p.weights.at(ci, co, y % 2, x_ % 2) as f64;
                    }
                    out[((n * c_out + co) * h2 + y) * w2 + x_] = acc;
                }
            }
        }
    }
    out
}

/// 2×2 stride-2 max-pool; returns values and the flat input index of each
/// window's first maximum in row-major scan order.
pub fn naive_maxpool2(x: &Tensor4<f32>) -> (Vec<f32>, Vec<usize>) {
    let s = x.shape();
    let (ho, wo) = (s.h / 2, s.w / 2);
    let mut vals = Vec::new();
    let mut argmax = Vec::new();
    for n in 0..s.n {
        for c in 0..s.c {
            for y in 0..ho {
                for x_ in 0..wo {
                    let mut best = (f32::NEG_INFINITY, 0);
                    for dy in 0..2 {
                        for dx in 0..2 {
                            let i = x.index(n, c, 2 * y + dy, 2 * x_ + dx);
                            if x.data()[i] > best.0 {
                                best = (x.data()[i], i);
                            }
                        }
                    }
                    vals.push(best.0);
                    argmax.push(best.1);
                }
            }
        }
    }
    (vals, argmax)
}

pub fn max_abs_diff(a: &[f32], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(&x, &y)| (x as f64 - y).abs()).fold(0.0, f64::max)
}

pub fn random_mask(rng: &mut SplitMix64, w: usize, h: usize, density: f64) -> MaskImage {
    let data = (0..w * h).map(|_| u8::from(rng.random_bool(density))).collect();
    MaskImage::new(w, h, data).unwrap()
}

pub fn foreground_set(m: &MaskImage) -> BTreeSet<(usize, usize)> {
    let mut s = BTreeSet::new();
    for y in 0..m.height() {
        for x in 0..m.width() {
            if m.plane().get(x, y) == 1 {
                s.insert((x, y));
            }
        }
    }
    s
}

/// IoU and pixel accuracy from coordinate sets.
pub fn set_metrics(pred: &MaskImage, truth: &MaskImage) -> (f64, f64) {
    let p = foreground_set(pred);
    let t = foreground_set(truth);
    let inter = p.intersection(&t).count();
    let union = p.union(&t).count();
    let total = pred.width() * pred.height();
    let iou = if union == 0 { 1.0 } else { inter as f64 / union as f64 };
    let disagree = p.symmetric_difference(&t).count();
    (iou, (total - disagree) as f64 / total as f64)
}

/// A network that copies its input to the logits: every encoder and decoder
/// 3×3 conv passes channel 0 through, the bottleneck and upconvs are zero,
/// and the 1×1 head maps `x` to `20x − 10`. On inputs in {0, 1} its
/// probabilities threshold back to the input exactly.
pub fn identity_unet(depth: usize, base: usize) -> cordseg_core::Params {
    let cfg = cordseg_core::UNetConfig::new(depth, base);
    let mut p = cordseg_core::Params::zeros(cfg).unwrap();
    let mut pass = |layer: usize| *p.layers[layer].weights.at_mut(0, 0, 1, 1) = 1.0;
    for level in 0..depth {
        pass(cfg.encoder_layer(level));
        pass(cfg.encoder_layer(level) + 1);
        pass(cfg.decoder_layer(level) + 1);
        pass(cfg.decoder_layer(level) + 2);
    }
    let head = &mut p.layers[cfg.head_layer()];
    *head.weights.at_mut(0, 0, 0, 0) = 20.0;
    head.bias[0] = -10.0;
    p
}

/// Parameter count written from the architecture description alone: each
/// k×k conv from i to o channels has o·(i·k² + 1) parameters, each 2×2
/// upconv i·o·4 + o.
pub fn counting_oracle(depth: usize, base: usize, c_in: usize, c_out: usize) -> usize {
    let conv = |i: usize, o: usize, k: usize| o * (i * k * k + 1);
    let up = |i: usize, o: usize| i * o * 4 + o;
    let ch = |l: usize| base * 2usize.pow(l as u32);
    let mut total = 0;
    for l in 0..depth {
        let i = if l == 0 { c_in } else { ch(l - 1) };
        total += conv(i, ch(l), 3) + conv(ch(l), ch(l), 3);
    }
    total += conv(ch(depth - 1), ch(depth), 3) + conv(ch(depth), ch(depth), 3);
    for l in 0..depth {
        total += up(ch(l + 1), ch(l)) + conv(2 * ch(l), ch(l), 3) + conv(ch(l), ch(l), 3);
    }
    total + conv(base, c_out, 1)
}
