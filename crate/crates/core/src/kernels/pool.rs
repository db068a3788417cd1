use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::{Shape4, Tensor4};

/// Argmax positions of a 2×2 max-pool, one per pooled cell: 0 top-left,
/// 1 top-right, 2 bottom-left, 3 bottom-right.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PoolIndices {
    shape: Shape4,
    indices: Vec<u8>,
}

impl PoolIndices {
    /// Shape of the pooled output.
    pub fn shape(&self) -> Shape4 {
        self.shape
    }

    pub fn indices(&self) -> &[u8] {
        &self.indices
    }
}

/// 2×2 max-pool with stride 2. Ties resolve to the first maximum in
/// row-major window order.
pub fn maxpool2<T: Scalar>(input: &Tensor4<T>) -> Result<(Tensor4<T>, PoolIndices)> {
    let s = input.shape();
    if !s.h.is_multiple_of(2) || !s.w.is_multiple_of(2) {
        return Err(Error::shape("maxpool2", "even height and width", format!("{}x{}", s.h, s.w)));
    }
    let os = Shape4::new(s.n, s.c, s.h / 2, s.w / 2);
    let mut out = Vec::with_capacity(os.len());
    let mut indices = Vec::with_capacity(os.len());
    for n in 0..s.n {
        for c in 0..s.c {
            let src = input.plane(n, c);
            for oy in 0..os.h {
                let r0 = &src[2 * oy * s.w..];
                let r1 = &src[(2 * oy + 1) * s.w..];
                for ox in 0..os.w {
                    let cand = [r0[2 * ox], r0[2 * ox + 1], r1[2 * ox], r1[2 * ox + 1]];
                    let mut best = 0u8;
                    for k in 1..4u8 {
                        if cand[k as usize] > cand[best as usize] {
                            best = k;
                        }
                    }
                    out.push(cand[best as usize]);
                    indices.push(best);
                }
            }
        }
    }
    Ok((Tensor4::from_vec(os, out)?, PoolIndices { shape: os, indices }))
}

/// Routes each pooled cell's upstream gradient to its recorded argmax.
pub fn maxpool2_backward<T: Scalar>(indices: &PoolIndices, grad_out: &Tensor4<T>) -> Result<Tensor4<T>> {
    let os = indices.shape;
    if grad_out.shape() != os {
        return Err(Error::shape("maxpool2_backward", os.to_string(), grad_out.shape().to_string()));
    }
    let is = Shape4::new(os.n, os.c, os.h * 2, os.w * 2);
    let mut g_in = Tensor4::zeros(is);
    let g = grad_out.data();
    let dst = g_in.data_mut();
    for (cell, (&k, &gv)) in indices.indices.iter().zip(g).enumerate() {
        let ox = cell % os.w;
        let oy = (cell / os.w) % os.h;
        let plane = cell / (os.w * os.h);
        let (dy, dx) = ((k / 2) as usize, (k % 2) as usize);
        dst[plane * is.plane() + (2 * oy + dy) * is.w + 2 * ox + dx] = gv;
    }
    Ok(g_in)
}
