use super::require_same_shape;
use crate::error::Result;
use crate::scalar::Scalar;
use crate::tensor::Tensor4;

pub fn relu<T: Scalar>(input: &Tensor4<T>) -> Tensor4<T> {
    input.map(|x| if x > T::zero() { x } else { T::zero() })
}

/// Passes `grad` where the activation was positive. Accepts either the
/// pre-activation or the ReLU output, since both are positive at the same
/// positions. The derivative at exactly zero is zero.
pub fn relu_backward<T: Scalar>(activation: &Tensor4<T>, grad: &Tensor4<T>) -> Result<Tensor4<T>> {
    require_same_shape("relu_backward", activation.shape(), grad.shape())?;
    let data = activation
        .data()
        .iter()
        .zip(grad.data())
        .map(|(&a, &g)| if a > T::zero() { g } else { T::zero() })
        .collect();
    Tensor4::from_vec(grad.shape(), data)
}

/// Logistic function evaluated on the branch that cannot overflow.
#[inline]
pub fn sigmoid_scalar<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

pub fn sigmoid<T: Scalar>(input: &Tensor4<T>) -> Tensor4<T> {
    input.map(sigmoid_scalar)
}

/// `grad · σ(1 − σ)` given the sigmoid output.
pub fn sigmoid_backward<T: Scalar>(output: &Tensor4<T>, grad: &Tensor4<T>) -> Result<Tensor4<T>> {
    require_same_shape("sigmoid_backward", output.shape(), grad.shape())?;
    let data = output
        .data()
        .iter()
        .zip(grad.data())
        .map(|(&s, &g)| g * s * (T::one() - s))
        .collect();
    Tensor4::from_vec(grad.shape(), data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Shape4;

    fn row(v: Vec<f32>) -> Tensor4<f32> {
        Tensor4::from_vec(Shape4::new(1, 1, 1, v.len()), v).unwrap()
    }

    #[test]
    fn relu_clamps_negative() {
        assert_eq!(relu(&row(vec![-1.0, 0.0, 2.0])).data(), &[0.0, 0.0, 2.0]);
        let pos = row(vec![0.5, 3.0]);
        assert_eq!(relu(&pos), pos);
    }

    #[test]
    fn relu_derivative_at_zero_is_zero() {
        let g = relu_backward(&row(vec![0.0, 1.0, -1.0]), &row(vec![5.0, 5.0, 5.0])).unwrap();
        assert_eq!(g.data(), &[0.0, 5.0, 0.0]);
    }

    #[test]
    fn sigmoid_values() {
        let s = sigmoid(&row(vec![0.0, 40.0, -40.0, -200.0]));
        assert_eq!(s.data()[0], 0.5);
        assert_eq!(s.data()[1], 1.0);
        assert!(s.data()[2] > 0.0 && s.data()[2] < 1e-17);
        assert!(s.data().iter().all(|v| v.is_finite()));
        let d = sigmoid_backward(&s, &row(vec![1.0; 4])).unwrap();
        assert_eq!(d.data()[0], 0.25);
    }
}
