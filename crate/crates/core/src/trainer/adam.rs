use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::unet::UNetParams;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// First and second moment estimates, laid out like the parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState<T> {
    pub m: UNetParams<T>,
    pub v: UNetParams<T>,
    pub t: u64,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(params: &UNetParams<T>) -> Self {
        Self {
            m: params.zeros_like(),
            v: params.zeros_like(),
            t: 0,
        }
    }
}

/// One bias-corrected Adam update in place. A non-finite gradient aborts
/// the step before anything is modified.
pub fn adam_step<T: Scalar>(
    params: &mut UNetParams<T>,
    grads: &UNetParams<T>,
    state: &mut AdamState<T>,
    cfg: &AdamConfig,
) -> Result<()> {
    let n = params.param_count();
    if grads.param_count() != n || state.m.param_count() != n || state.v.param_count() != n {
        return Err(Error::shape(
            "adam_step",
            format!("{n} parameters"),
            format!("grads {} m {} v {}", grads.param_count(), state.m.param_count(), state.v.param_count()),
        ));
    }
    if let Some((i, g)) = grads.values().enumerate().find(|(_, g)| !g.is_finite()) {
        return Err(Error::Numeric(format!("gradient {i} is {g}")));
    }
    state.t += 1;
    let t = state.t as f64;
    let (b1, b2) = (T::lit(cfg.beta1), T::lit(cfg.beta2));
    let bc1 = T::lit(1.0 - cfg.beta1.powf(t));
    let bc2 = T::lit(1.0 - cfg.beta2.powf(t));
    let (lr, eps) = (T::lit(cfg.learning_rate), T::lit(cfg.epsilon));
    let one = T::one();
    for (((p, &g), m), v) in params
        .values_mut()
        .zip(grads.values())
        .zip(state.m.values_mut())
        .zip(state.v.values_mut())
    {
        *m = b1 * *m + (one - b1) * g;
        *v = b2 * *v + (one - b2) * g * g;
        let m_hat = *m / bc1;
        let v_hat = *v / bc2;
        *p -= lr * m_hat / (v_hat.sqrt() + eps);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::unet::UNetConfig;

    fn scalar_model(theta: f64) -> UNetParams<f64> {
        let mut p = UNetParams::<f64>::zeros(UNetConfig::new(1, 1)).unwrap();
        p.layers[0].weights.data_mut()[0] = theta;
        p
    }

    #[test]
    fn zero_gradient_is_identity() {
        let mut p = UNetParams::<f32>::init(UNetConfig::new(1, 2), 3).unwrap();
        let before = p.clone();
        let mut s = AdamState::new(&p);
        adam_step(&mut p, &before.zeros_like(), &mut s, &AdamConfig::default()).unwrap();
        assert_eq!(p, before);
        assert_eq!(s.t, 1);
    }

    #[test]
    fn first_step_matches_hand_evaluation() {
        // m = 0.05, v = 0.00025, m̂ = 0.5, v̂ = 0.25 → Δ = −1e-3·0.5/(0.5 + 1e-8).
        let mut p = scalar_model(1.0);
        let mut g = p.zeros_like();
        g.layers[0].weights.data_mut()[0] = 0.5;
        let mut s = AdamState::new(&p);
        adam_step(&mut p, &g, &mut s, &AdamConfig::default()).unwrap();
        let theta = p.layers[0].weights.data()[0];
        assert!((theta - 0.999_000_000_02).abs() < 1e-13, "{theta}");
        let step1 = 1.0 - theta;
        adam_step(&mut p, &g, &mut s, &AdamConfig::default()).unwrap();
        let step2 = theta - p.layers[0].weights.data()[0];
        assert!((step1 - 1e-3).abs() < 1e-9 && (step2 - 1e-3).abs() < 1e-9, "{step1} {step2}");
    }

    #[test]
    fn non_finite_gradient_aborts() {
        let mut p = scalar_model(1.0);
        let before = p.clone();
        let mut g = p.zeros_like();
        g.layers[1].bias[0] = f64::NAN;
        let mut s = AdamState::new(&p);
        assert!(matches!(adam_step(&mut p, &g, &mut s, &AdamConfig::default()), Err(Error::Numeric(_))));
        assert_eq!(p, before);
        assert_eq!(s.t, 0);
    }
}
