use super::{require_same_shape, ConvGrads, ConvParams};
use crate::error::{Error, Result};
use crate::scalar::{axpy, dot, Scalar};
use crate::tensor::{Shape4, Tensor4};

/// Valid `[lo, hi)` range of destination coordinates when reading the
/// source at `dst + offset` along an axis of length `len`.
#[inline]
fn valid_range(offset: isize, len: usize) -> (usize, usize) {
    let lo = (-offset).max(0) as usize;
    let hi = (len as isize - offset).clamp(0, len as isize) as usize;
    (lo, hi.max(lo))
}

fn check(input: Shape4, p: &ConvParams<impl Scalar>) -> Result<(usize, usize, usize, usize)> {
    let k = p.weights.shape();
    if input.c != k.c {
        return Err(Error::shape(
            "conv2d",
            format!("input channels {} for kernel {}", k.c, k),
            format!("input {}", input),
        ));
    }
    if k.h.is_multiple_of(2) || k.w.is_multiple_of(2) || p.bias.len() != k.n {
        return Err(Error::shape("conv2d", "odd kernel with one bias per output channel", format!("kernel {} bias {}", k, p.bias.len())));
    }
    Ok((k.n, k.h, k.w, k.h / 2))
}

/// Stride-1 convolution with zero same-padding; output spatial size equals
/// the input's.
pub fn conv2d<T: Scalar>(input: &Tensor4<T>, p: &ConvParams<T>) -> Result<Tensor4<T>> {
    let s = input.shape();
    let (c_out, kh, kw, _) = check(s, p)?;
    let (ph, pw) = ((kh / 2) as isize, (kw / 2) as isize);
    let (h, w) = (s.h, s.w);
    let mut out = Tensor4::zeros(Shape4::new(s.n, c_out, h, w));

    for n in 0..s.n {
        for co in 0..c_out {
            let dst = out.plane_mut(n, co);
            dst.fill(p.bias[co]);
            for ci in 0..s.c {
                let src = input.plane(n, ci);
                for ky in 0..kh {
                    let dy = ky as isize - ph;
                    let (y0, y1) = valid_range(dy, h);
                    for kx in 0..kw {
                        let wt = *p.weights.at(co, ci, ky, kx);
                        let dx = kx as isize - pw;
                        let (x0, x1) = valid_range(dx, w);
                        if x0 >= x1 {
                            continue;
                        }
                        for y in y0..y1 {
                            let sy = (y as isize + dy) as usize;
                            let sx0 = (x0 as isize + dx) as usize;
                            axpy(
                                wt,
                                &src[sy * w + sx0..sy * w + sx0 + (x1 - x0)],
                                &mut dst[y * w + x0..y * w + x1],
                            );
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Reverse pass of [`conv2d`]: gradients with respect to the input, weights
/// and bias given the upstream gradient `grad_out`.
pub fn conv2d_backward<T: Scalar>(
    input: &Tensor4<T>,
    p: &ConvParams<T>,
    grad_out: &Tensor4<T>,
) -> Result<ConvGrads<T>> {
    let s = input.shape();
    let (c_out, kh, kw, _) = check(s, p)?;
    require_same_shape("conv2d_backward", Shape4::new(s.n, c_out, s.h, s.w), grad_out.shape())?;
    let (ph, pw) = ((kh / 2) as isize, (kw / 2) as isize);
    let (h, w) = (s.h, s.w);

    let mut g_in = Tensor4::zeros(s);
    for n in 0..s.n {
        for ci in 0..s.c {
            let dst = g_in.plane_mut(n, ci);
            for co in 0..c_out {
                let g = grad_out.plane(n, co);
                for ky in 0..kh {
                    let dy = ky as isize - ph;
                    let (y0, y1) = valid_range(dy, h);
                    for kx in 0..kw {
                        let wt = *p.weights.at(co, ci, ky, kx);
                        let dx = kx as isize - pw;
                        let (x0, x1) = valid_range(dx, w);
                        if x0 >= x1 {
                            continue;
                        }
                        // out[y, x] read in[y+dy, x+dx]; scatter back.
                        for y in y0..y1 {
                            let sy = (y as isize + dy) as usize;
                            let sx0 = (x0 as isize + dx) as usize;
                            axpy(
                                wt,
                                &g[y * w + x0..y * w + x1],
                                &mut dst[sy * w + sx0..sy * w + sx0 + (x1 - x0)],
                            );
                        }
                    }
                }
            }
        }
    }

    let mut g_p = p.zeros_like();
    for co in 0..c_out {
        for ci in 0..s.c {
            for ky in 0..kh {
                let dy = ky as isize - ph;
                let (y0, y1) = valid_range(dy, h);
                for kx in 0..kw {
                    let dx = kx as isize - pw;
                    let (x0, x1) = valid_range(dx, w);
                    let mut acc = T::zero();
                    if x0 < x1 {
                        for n in 0..s.n {
                            let g = grad_out.plane(n, co);
                            let src = input.plane(n, ci);
                            for y in y0..y1 {
                                let sy = (y as isize + dy) as usize;
                                let sx0 = (x0 as isize + dx) as usize;
                                acc += dot(
                                    &g[y * w + x0..y * w + x1],
                                    &src[sy * w + sx0..sy * w + sx0 + (x1 - x0)],
                                );
                            }
                        }
                    }
                    *g_p.weights.at_mut(co, ci, ky, kx) = acc;
                }
            }
        }
        g_p.bias[co] = (0..s.n).map(|n| grad_out.plane(n, co).iter().copied().sum::<T>()).sum();
    }

    Ok(ConvGrads { input: g_in, params: g_p })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(k: Vec<f32>, kh: usize, bias: f32) -> ConvParams<f32> {
        ConvParams::conv(Tensor4::from_vec(Shape4::new(1, 1, kh, kh), k).unwrap(), vec![bias]).unwrap()
    }

    fn grid() -> Tensor4<f32> {
        Tensor4::from_vec(Shape4::new(1, 1, 3, 3), (1..=9).map(|v| v as f32).collect()).unwrap()
    }

    #[test]
    fn delta_kernel_is_identity() {
        let mut k = vec![0.0; 9];
        k[4] = 1.0;
        let out = conv2d(&grid(), &params(k, 3, 0.0)).unwrap();
        assert_eq!(out, grid());
    }

    #[test]
    fn ones_kernel_sums_neighbourhood() {
        let out = conv2d(&grid(), &params(vec![1.0; 9], 3, 0.0)).unwrap();
        assert_eq!(*out.at(0, 0, 1, 1), 45.0);
        assert_eq!(*out.at(0, 0, 0, 0), 12.0);
        assert_eq!(*out.at(0, 0, 2, 2), 5.0 + 6.0 + 8.0 + 9.0);
    }

    #[test]
    fn zero_input_gives_bias() {
        let w = Tensor4::filled(Shape4::new(3, 2, 3, 3), 0.7f32);
        let p = ConvParams::conv(w, vec![0.5, -1.0, 2.0]).unwrap();
        let out = conv2d(&Tensor4::zeros(Shape4::new(2, 2, 4, 5)), &p).unwrap();
        for n in 0..2 {
            for (k, b) in [0.5, -1.0, 2.0].into_iter().enumerate() {
                assert!(out.plane(n, k).iter().all(|&v| v == b));
            }
        }
    }

    #[test]
    fn channel_mismatch_names_both_shapes() {
        let p = params(vec![0.0; 9], 3, 0.0);
        let err = conv2d(&Tensor4::<f32>::zeros(Shape4::new(1, 2, 3, 3)), &p).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("(1, 1, 3, 3)") && msg.contains("(1, 2, 3, 3)"), "{msg}");
    }

    #[test]
    fn kernel_wider_than_image() {
        // 5x5 kernel over a 1x2 image: most taps fall into padding.
        let p = params(vec![1.0; 25], 5, 0.0);
        let x = Tensor4::from_vec(Shape4::new(1, 1, 1, 2), vec![3.0, 4.0]).unwrap();
        let out = conv2d(&x, &p).unwrap();
        assert_eq!(out.data(), &[7.0, 7.0]);
    }

    #[test]
    fn bias_gradient_sums_upstream() {
        let p = params(vec![0.1; 9], 3, 0.0);
        let x = grid();
        let g = Tensor4::filled(Shape4::new(1, 1, 3, 3), 2.0f32);
        let grads = conv2d_backward(&x, &p, &g).unwrap();
        assert_eq!(grads.params.bias, vec![18.0]);
        // Centre weight sees every input pixel once.
        assert_eq!(*grads.params.weights.at(0, 0, 1, 1), 2.0 * 45.0);
    }
}
