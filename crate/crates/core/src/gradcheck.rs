//! Central finite-difference validation of analytic gradients.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::rng::SplitMix64;
use crate::unet::UNetConfig;
use crate::tensor::Shape4;
use crate::kernels::{bce_with_logits, bce_with_logits_backward};
use crate::scalar::Scalar;
use crate::tensor::Tensor4;
use crate::unet::{backward, forward, UNetParams};

pub const DEFAULT_STEP: f64 = 1e-3;
/// Smallest step [`finite_diff_check_refined`] descends to. Below this, 64-bit
/// cancellation noise in `f(θ+h) − f(θ−h)` dominates.
pub const MIN_REFINED_STEP: f64 = 1e-6;

/// A scalar function of a flat parameter vector together with its analytic
/// gradient. Evaluation is in 64-bit so the checker's own arithmetic never
/// dominates the comparison.
pub trait Objective {
    fn value(&self, theta: &[f64]) -> Result<f64>;
    fn gradient(&self, theta: &[f64]) -> Result<Vec<f64>>;
}

/// Adapter turning two closures into an [`Objective`].
pub struct FnObjective<V, G> {
    pub value: V,
    pub gradient: G,
}

impl<V, G> Objective for FnObjective<V, G>
where
    V: Fn(&[f64]) -> Result<f64>,
    G: Fn(&[f64]) -> Result<Vec<f64>>,
{
    fn value(&self, theta: &[f64]) -> Result<f64> {
        (self.value)(theta)
    }

    fn gradient(&self, theta: &[f64]) -> Result<Vec<f64>> {
        (self.gradient)(theta)
    }
}

#[derive(Clone, Debug)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// Coordinate at which `max_rel_error` occurs.
    pub worst_index: usize,
    /// Coordinates re-evaluated at a smaller step.
    pub refined: usize,
    pub analytic: Vec<f64>,
    pub numeric: Vec<f64>,
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(1e-8)
}

/// Compares the analytic gradient with `(f(θ+h·eᵢ) − f(θ−h·eᵢ)) / 2h` on
/// every coordinate and returns the largest relative disagreement.
pub fn finite_diff_check(f: &impl Objective, theta: &[f64], step: f64) -> Result<GradCheckReport> {
    check_with(f, theta, step, step, f64::INFINITY)
}

/// Like [`finite_diff_check`], but a coordinate whose relative error exceeds
/// `tolerance` is re-evaluated with the step divided by ten, down to
/// `min_step`, and keeps its smallest error.
///
/// Piecewise-linear activations make `f` non-differentiable on a measure-zero
/// set; a central difference that straddles such a kink is wrong by an amount
/// that vanishes with the step, whereas an incorrect analytic gradient is
/// wrong at every step.
pub fn finite_diff_check_refined(
    f: &impl Objective,
    theta: &[f64],
    step: f64,
    min_step: f64,
    tolerance: f64,
) -> Result<GradCheckReport> {
    check_with(f, theta, step, min_step, tolerance)
}

fn check_with(f: &impl Objective, theta: &[f64], step: f64, min_step: f64, tolerance: f64) -> Result<GradCheckReport> {
    if !(step > 0.0 && step.is_finite() && min_step > 0.0 && min_step <= step) {
        return Err(Error::Domain(format!("finite-difference steps must satisfy 0 < {min_step} <= {step}")));
    }
    let finite = |v: f64, what: &str| {
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Numeric(format!("non-finite {what}: {v}")))
        }
    };
    finite(f.value(theta)?, "loss")?;
    let analytic = f.gradient(theta)?;
    if analytic.len() != theta.len() {
        return Err(Error::shape(
            "finite_diff_check",
            format!("{} gradient entries", theta.len()),
            analytic.len().to_string(),
        ));
    }

    let mut probe = theta.to_vec();
    let mut numeric = Vec::with_capacity(theta.len());
    let (mut max_rel_error, mut worst_index, mut refined) = (0.0f64, 0usize, 0usize);
    for i in 0..theta.len() {
        let base = probe[i];
        let mut central = |h: f64| -> Result<f64> {
            probe[i] = base + h;
            let up = finite(f.value(&probe)?, "loss");
            probe[i] = base - h;
            let down = finite(f.value(&probe)?, "loss");
            probe[i] = base;
            Ok((up? - down?) / (2.0 * h))
        };
        let mut h = step;
        let mut n = central(h)?;
        let mut err = relative_error(analytic[i], n);
        if err > tolerance && h / 10.0 >= min_step * (1.0 - 1e-9) {
            refined += 1;
        }
        while err > tolerance && h / 10.0 >= min_step * (1.0 - 1e-9) {
            h /= 10.0;
            let cand = central(h)?;
            let cand_err = relative_error(analytic[i], cand);
            if cand_err < err {
                n = cand;
                err = cand_err;
            }
        }
        if err > max_rel_error {
            max_rel_error = err;
            worst_index = i;
        }
        numeric.push(n);
    }
    Ok(GradCheckReport {
        max_rel_error,
        worst_index,
        refined,
        analytic,
        numeric,
    })
}

/// Mean BCE of a U-Net on a fixed `(input, target)` pair as a function of
/// its flattened parameters, evaluated at scalar type `T`.
pub struct UNetLoss<T> {
    template: UNetParams<T>,
    input: Tensor4<T>,
    target: Tensor4<T>,
}

impl<T: Scalar> UNetLoss<T> {
    pub fn new(template: UNetParams<T>, input: Tensor4<T>, target: Tensor4<T>) -> Self {
        Self { template, input, target }
    }

    pub fn theta(&self) -> Vec<f64> {
        self.template.values().map(|v| v.to_f64_lossless()).collect()
    }

    fn params(&self, theta: &[f64]) -> Result<UNetParams<T>> {
        let mut p = self.template.clone();
        let flat: Vec<T> = theta.iter().map(|&v| T::lit(v)).collect();
        p.assign_flat(&flat)?;
        Ok(p)
    }
}

impl<T: Scalar> Objective for UNetLoss<T> {
    fn value(&self, theta: &[f64]) -> Result<f64> {
        let p = self.params(theta)?;
        let (logits, _) = forward(&p, &self.input)?;
        Ok(bce_with_logits(&logits, &self.target)?.to_f64_lossless())
    }

    fn gradient(&self, theta: &[f64]) -> Result<Vec<f64>> {
        let p = self.params(theta)?;
        let (logits, cache) = forward(&p, &self.input)?;
        let g = bce_with_logits_backward(&logits, &self.target)?;
        let grads = backward(&p, &cache, &g)?;
        Ok(grads.values().map(|v| v.to_f64_lossless()).collect())
    }
}

/// Seeded check problem: a freshly initialized `f32` model with small random
/// biases (zero biases put whole channels exactly on the ReLU kink), a
/// uniform `side × side` input and a random binary target, lifted to `f64`.
pub fn seeded_unet_loss(config: UNetConfig, side: usize, seed: u64) -> Result<UNetLoss<f64>> {
    let mut params = UNetParams::<f32>::init(config, seed)?;
    let mut rng = SplitMix64::new(seed ^ 0xD1B5_4A32_D192_ED03);
    let bias = Normal::new(0.0f64, 0.1).expect("valid normal");
    for layer in &mut params.layers {
        for b in &mut layer.bias {
            *b = bias.sample(&mut rng) as f32;
        }
    }
    let shape = Shape4::new(1, config.in_channels, side, side);
    let input: Vec<f32> = (0..shape.len()).map(|_| rng.random::<f32>()).collect();
    let tshape = Shape4::new(1, config.out_channels, side, side);
    let target: Vec<f32> = (0..tshape.len())
        .map(|_| if rng.random::<bool>() { 1.0 } else { 0.0 })
        .collect();
    Ok(UNetLoss::new(
        params.cast(),
        Tensor4::from_vec(shape, input)?.cast(),
        Tensor4::from_vec(tshape, target)?.cast(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_at_three() {
        let f = FnObjective {
            value: |t: &[f64]| Ok(t[0] * t[0]),
            gradient: |t: &[f64]| Ok(vec![2.0 * t[0]]),
        };
        let r = finite_diff_check(&f, &[3.0], DEFAULT_STEP).unwrap();
        assert!((r.numeric[0] - 6.0).abs() < 1e-9);
        assert_eq!(r.analytic[0], 6.0);
        assert!(r.max_rel_error < 1e-10);
    }

    #[test]
    fn constant_function() {
        let f = FnObjective {
            value: |_: &[f64]| Ok(4.0),
            gradient: |t: &[f64]| Ok(vec![0.0; t.len()]),
        };
        let r = finite_diff_check(&f, &[1.0, -2.0], DEFAULT_STEP).unwrap();
        assert_eq!(r.max_rel_error, 0.0);
        assert_eq!(r.numeric, vec![0.0, 0.0]);
    }

    #[test]
    fn wrong_gradient_detected() {
        let f = FnObjective {
            value: |t: &[f64]| Ok(t[0] * t[1]),
            gradient: |t: &[f64]| Ok(vec![t[1], -t[0]]),
        };
        let r = finite_diff_check(&f, &[2.0, 5.0], DEFAULT_STEP).unwrap();
        assert!((r.max_rel_error - 1.0).abs() < 1e-9);
        assert_eq!(r.worst_index, 1);
    }

    #[test]
    fn non_finite_loss_is_numeric_error() {
        let f = FnObjective {
            value: |t: &[f64]| Ok(1.0 / t[0]),
            gradient: |t: &[f64]| Ok(vec![-1.0 / (t[0] * t[0])]),
        };
        assert!(matches!(finite_diff_check(&f, &[0.0], 1e-3), Err(Error::Numeric(_))));
        assert!(finite_diff_check(&f, &[1.0], 0.0).is_err());
    }
}
