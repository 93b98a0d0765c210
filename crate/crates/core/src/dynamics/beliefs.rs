use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

/// Drift and volatility of the log-price increments, per unit time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams<S = f64> {
    pub mu: S,
    pub sigma: S,
}

impl<S: Scalar> ModelParams<S> {
    pub fn new(mu: S, sigma: S) -> Self {
        debug_assert!(sigma >= S::zero());
        ModelParams { mu, sigma }
    }
}

/// Point estimates of `(mu, sigma)` together with the number of
/// observations (real or pseudo) that back them.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Beliefs<S = f64> {
    pub mu_bar: S,
    pub sigma_bar: S,
    pub n_eff: u32,
}

impl<S: Scalar> Beliefs<S> {
    pub fn new(mu_bar: S, sigma_bar: S, n_eff: u32) -> Self {
        debug_assert!(sigma_bar >= S::zero() && n_eff >= 1);
        Beliefs {
            mu_bar,
            sigma_bar,
            n_eff,
        }
    }

    pub fn params(&self) -> ModelParams<S> {
        ModelParams {
            mu: self.mu_bar,
            sigma: self.sigma_bar,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.mu_bar.is_finite() && self.sigma_bar.is_finite()
    }
}

/// One step of the recursive maximum-likelihood filter. The observed drift
/// sample is `mu + sigma * z / sqrt(dt)`; the squared-deviation term is
/// `((mu_bar - mu) sqrt(dt) - sigma z)^2 = dt (mu_bar - sample)^2`.
pub fn update_beliefs<S: Scalar>(
    b: &Beliefs<S>,
    theta: &ModelParams<S>,
    z: S,
    dt: S,
) -> Beliefs<S> {
    let n = S::from_usize_lossy(b.n_eff as usize);
    let n1 = n + S::one();
    let sq_dt = dt.sqrt();
    let mu_bar = (n * b.mu_bar + theta.mu + theta.sigma * z / sq_dt) / n1;
    let dev = (b.mu_bar - theta.mu) * sq_dt - theta.sigma * z;
    let var = n / n1 * b.sigma_bar * b.sigma_bar + n / (n1 * n1) * dev * dev;
    Beliefs {
        mu_bar,
        sigma_bar: var.max(S::zero()).sqrt(),
        n_eff: b.n_eff + 1,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn hand_computed_single_step() {
        let b = Beliefs::new(0.1, 0.2, 1);
        let out = update_beliefs(&b, &ModelParams::new(0.1, 0.0), 0.0, 1.0);
        assert_abs_diff_eq!(out.mu_bar, 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(out.sigma_bar, 0.02f64.sqrt(), epsilon = 1e-15);
        assert_eq!(out.n_eff, 2);
    }

    #[test]
    fn matched_drift_without_noise_is_a_fixed_point() {
        for &z in &[-3.0, -0.1, 0.0, 2.5] {
            for &dt in &[0.01, 0.1, 1.0] {
                let b = Beliefs::new(0.07, 0.3, 5);
                let out = update_beliefs(&b, &ModelParams::new(0.07, 0.0), z, dt);
                assert_abs_diff_eq!(out.mu_bar, 0.07, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn works_in_single_precision() {
        let b = Beliefs::<f32>::new(0.1, 0.2, 1);
        let out = update_beliefs(&b, &ModelParams::new(0.1f32, 0.0), 0.0, 1.0);
        assert!((out.sigma_bar - 0.02f32.sqrt()).abs() < 1e-6);
    }
}
