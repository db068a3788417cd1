//! Forward kernels and their vector-Jacobian products.
//!
//! Every kernel is a pure function. Each output element is accumulated by a
//! single loop nest in a fixed order, so results do not depend on how callers
//! distribute work across threads.

mod activation;
mod concat;
mod conv;
mod loss;
mod pool;
mod upconv;

pub use activation::{relu, relu_backward, sigmoid, sigmoid_backward, sigmoid_scalar};
pub use concat::{concat_channels, split_channels};
pub use conv::{conv2d, conv2d_backward};
pub use loss::{bce_with_logits, bce_with_logits_backward};
pub use pool::{maxpool2, maxpool2_backward, PoolIndices};
pub use upconv::{upconv2, upconv2_backward};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::{Shape4, Tensor4};

/// Weights and bias of one convolution or transposed convolution.
///
/// For [`conv2d`] the weight shape is `(out, in, kh, kw)`; for [`upconv2`]
/// it is `(in, out, 2, 2)`. The bias always has one entry per output channel.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvParams<T> {
    pub weights: Tensor4<T>,
    pub bias: Vec<T>,
}

impl<T: Scalar> ConvParams<T> {
    /// Same-padding convolution parameters, `kh`/`kw` odd.
    pub fn conv(weights: Tensor4<T>, bias: Vec<T>) -> Result<Self> {
        let s = weights.shape();
        if s.h.is_multiple_of(2) || s.w.is_multiple_of(2) {
            return Err(Error::shape("ConvParams::conv", "odd kernel", format!("{}x{}", s.h, s.w)));
        }
        if bias.len() != s.n {
            return Err(Error::shape("ConvParams::conv", format!("bias of {}", s.n), format!("bias of {}", bias.len())));
        }
        Ok(Self { weights, bias })
    }

    /// Stride-2 transposed convolution parameters, kernel 2×2.
    pub fn upconv(weights: Tensor4<T>, bias: Vec<T>) -> Result<Self> {
        let s = weights.shape();
        if s.h != 2 || s.w != 2 {
            return Err(Error::shape("ConvParams::upconv", "2x2 kernel", format!("{}x{}", s.h, s.w)));
        }
        if bias.len() != s.c {
            return Err(Error::shape("ConvParams::upconv", format!("bias of {}", s.c), format!("bias of {}", bias.len())));
        }
        Ok(Self { weights, bias })
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            weights: Tensor4::zeros(self.weights.shape()),
            bias: vec![T::zero(); self.bias.len()],
        }
    }

    pub fn param_count(&self) -> usize {
        self.weights.shape().len() + self.bias.len()
    }

    pub fn cast<U: Scalar>(&self) -> ConvParams<U> {
        ConvParams {
            weights: self.weights.cast(),
            bias: self.bias.iter().map(|&b| U::lit(b.to_f64_lossless())).collect(),
        }
    }

    /// Weights then bias, in storage order.
    pub fn values(&self) -> impl Iterator<Item = &T> {
        self.weights.data().iter().chain(self.bias.iter())
    }

    pub fn values_mut(&mut self) -> impl Iterator<Item = &mut T> {
        self.weights.data_mut().iter_mut().chain(self.bias.iter_mut())
    }
}

/// Result of a convolution's reverse pass.
#[derive(Clone, Debug)]
pub struct ConvGrads<T> {
    pub input: Tensor4<T>,
    pub params: ConvParams<T>,
}

fn require_same_shape(op: &'static str, a: Shape4, b: Shape4) -> Result<()> {
    if a != b {
        return Err(Error::shape(op, a.to_string(), b.to_string()));
    }
    Ok(())
}
