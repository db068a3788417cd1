use super::{require_same_shape, ConvGrads, ConvParams};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::{Shape4, Tensor4};

fn check(input: Shape4, p: &ConvParams<impl Scalar>) -> Result<usize> {
    let k = p.weights.shape();
    if k.h != 2 || k.w != 2 {
        return Err(Error::shape("upconv2", "2x2 kernel", format!("kernel {k}")));
    }
    if input.c != k.n {
        return Err(Error::shape(
            "upconv2",
            format!("input channels {} for kernel {}", k.n, k),
            format!("input {input}"),
        ));
    }
    if p.bias.len() != k.c {
        return Err(Error::shape("upconv2", format!("bias of {}", k.c), format!("bias of {}", p.bias.len())));
    }
    Ok(k.c)
}

/// Stride-2 transposed convolution with a 2×2 kernel. Every input pixel
/// scatters `value × kernel` into its own 2×2 output block, so the output is
/// exactly twice the input size and blocks never overlap.
pub fn upconv2<T: Scalar>(input: &Tensor4<T>, p: &ConvParams<T>) -> Result<Tensor4<T>> {
    let s = input.shape();
    let c_out = check(s, p)?;
    let (h, w) = (s.h, s.w);
    let w2 = 2 * w;
    let mut out = Tensor4::zeros(Shape4::new(s.n, c_out, 2 * h, w2));
    for n in 0..s.n {
        for co in 0..c_out {
            let dst = out.plane_mut(n, co);
            dst.fill(p.bias[co]);
            for ci in 0..s.c {
                let src = input.plane(n, ci);
                for dy in 0..2 {
                    for dx in 0..2 {
                        let wt = *p.weights.at(ci, co, dy, dx);
                        for y in 0..h {
                            let row = &mut dst[(2 * y + dy) * w2..(2 * y + dy + 1) * w2];
                            for (x, &v) in src[y * w..(y + 1) * w].iter().enumerate() {
                                row[2 * x + dx] += wt * v;
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Reverse pass of [`upconv2`].
pub fn upconv2_backward<T: Scalar>(
    input: &Tensor4<T>,
    p: &ConvParams<T>,
    grad_out: &Tensor4<T>,
) -> Result<ConvGrads<T>> {
    let s = input.shape();
    let c_out = check(s, p)?;
    require_same_shape("upconv2_backward", Shape4::new(s.n, c_out, 2 * s.h, 2 * s.w), grad_out.shape())?;
    let (h, w) = (s.h, s.w);
    let w2 = 2 * w;

    let mut g_in = Tensor4::zeros(s);
    for n in 0..s.n {
        for ci in 0..s.c {
            let dst = g_in.plane_mut(n, ci);
            for co in 0..c_out {
                let g = grad_out.plane(n, co);
                for dy in 0..2 {
                    for dx in 0..2 {
                        let wt = *p.weights.at(ci, co, dy, dx);
                        for y in 0..h {
                            let row = &g[(2 * y + dy) * w2..(2 * y + dy + 1) * w2];
                            for (x, d) in dst[y * w..(y + 1) * w].iter_mut().enumerate() {
                                *d += wt * row[2 * x + dx];
                            }
                        }
                    }
                }
            }
        }
    }

    let mut g_p = p.zeros_like();
    for ci in 0..s.c {
        for co in 0..c_out {
            for dy in 0..2 {
                for dx in 0..2 {
                    let mut acc = T::zero();
                    for n in 0..s.n {
                        let src = input.plane(n, ci);
                        let g = grad_out.plane(n, co);
                        for y in 0..h {
                            let row = &g[(2 * y + dy) * w2..(2 * y + dy + 1) * w2];
                            for (x, &v) in src[y * w..(y + 1) * w].iter().enumerate() {
                                acc += v * row[2 * x + dx];
                            }
                        }
                    }
                    *g_p.weights.at_mut(ci, co, dy, dx) = acc;
                }
            }
        }
    }
    for co in 0..c_out {
        g_p.bias[co] = (0..s.n).map(|n| grad_out.plane(n, co).iter().copied().sum::<T>()).sum();
    }
    Ok(ConvGrads { input: g_in, params: g_p })
}
