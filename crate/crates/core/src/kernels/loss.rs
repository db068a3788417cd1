use super::activation::sigmoid_scalar;
use super::require_same_shape;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor4;

fn check<T: Scalar>(logits: &Tensor4<T>, targets: &Tensor4<T>) -> Result<()> {
    require_same_shape("bce_with_logits", logits.shape(), targets.shape())?;
    if let Some(bad) = targets.data().iter().find(|&&y| y != T::zero() && y != T::one()) {
        return Err(Error::Domain(format!("bce target {bad} is not 0 or 1")));
    }
    Ok(())
}

/// Mean binary cross-entropy on logits,
/// `max(z, 0) − z·y + ln(1 + e^(−|z|))`.
pub fn bce_with_logits<T: Scalar>(logits: &Tensor4<T>, targets: &Tensor4<T>) -> Result<T> {
    check(logits, targets)?;
    let mut acc = T::zero();
    for (&z, &y) in logits.data().iter().zip(targets.data()) {
        acc += z.max(T::zero()) - z * y + (-z.abs()).exp().ln_1p();
    }
    Ok(acc / T::lit(logits.data().len() as f64))
}

/// `(σ(z) − y) / count` per element.
pub fn bce_with_logits_backward<T: Scalar>(logits: &Tensor4<T>, targets: &Tensor4<T>) -> Result<Tensor4<T>> {
    check(logits, targets)?;
    let count = T::lit(logits.data().len() as f64);
    let data = logits
        .data()
        .iter()
        .zip(targets.data())
        .map(|(&z, &y)| (sigmoid_scalar(z) - y) / count)
        .collect();
    Tensor4::from_vec(logits.shape(), data)
}
