use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::{Beliefs, ModelParams};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Confidence ellipsoid for `(mu, sigma)` around the current beliefs:
///
/// `(n dt / sb^2) (mu - mb)^2 + (n / (2 sb^4)) (sigma^2 - sb^2)^2 <= kappa`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyEllipsoid<S = f64> {
    pub center: Beliefs<S>,
    pub kappa: S,
    pub dt: S,
}

pub fn uncertainty_set<S: Scalar>(
    b: &Beliefs<S>,
    kappa: S,
    dt: S,
) -> Result<UncertaintyEllipsoid<S>> {
    if !(kappa >= S::zero()) || !kappa.is_finite() {
        return Err(Error::invalid(format!("kappa must be >= 0, got {kappa}")));
    }
    if !(dt > S::zero()) {
        return Err(Error::invalid(format!("dt must be > 0, got {dt}")));
    }
    if kappa > S::zero() && !(b.sigma_bar > S::zero()) {
        return Err(Error::invalid(
            "ellipsoid around sigma_bar = 0 with kappa > 0",
        ));
    }
    Ok(UncertaintyEllipsoid {
        center: *b,
        kappa,
        dt,
    })
}

impl<S: Scalar> UncertaintyEllipsoid<S> {
    /// Left-hand side of the defining quadratic form.
    pub fn constraint(&self, theta: &ModelParams<S>) -> S {
        let n = S::from_usize_lossy(self.center.n_eff as usize);
        let sb2 = self.center.sigma_bar * self.center.sigma_bar;
        let dmu = theta.mu - self.center.mu_bar;
        let dvar = theta.sigma * theta.sigma - sb2;
        if sb2 == S::zero() {
            return if dmu == S::zero() && dvar == S::zero() {
                S::zero()
            } else {
                S::infinity()
            };
        }
        n * self.dt / sb2 * dmu * dmu + n / (S::lit(2.0) * sb2 * sb2) * dvar * dvar
    }

    pub fn contains(&self, theta: &ModelParams<S>) -> bool {
        let tol = S::lit(1e-12) * (S::one() + self.kappa);
        self.constraint(theta) <= self.kappa + tol
    }

    pub fn is_singleton(&self) -> bool {
        self.kappa == S::zero()
    }

    /// Polar parameterization: angle `phi`, squared radius `rho` in `[0, kappa]`.
    /// `rho = kappa` lands on the boundary unless the variance clamp at 0 binds.
    pub fn point(&self, phi: S, rho: S) -> Result<ModelParams<S>> {
        if !(rho >= S::zero() && rho <= self.kappa) {
            return Err(Error::invalid(format!(
                "rho = {rho} outside [0, {}]",
                self.kappa
            )));
        }
        Ok(self.point_unchecked(phi, rho))
    }

    #[inline]
    pub(crate) fn point_unchecked(&self, phi: S, rho: S) -> ModelParams<S> {
        let n = S::from_usize_lossy(self.center.n_eff as usize);
        let sb = self.center.sigma_bar;
        let mu = self.center.mu_bar + (rho / (n * self.dt)).sqrt() * sb * phi.cos();
        let var = sb * sb * (S::one() + (S::lit(2.0) * rho / n).sqrt() * phi.sin());
        ModelParams {
            mu,
            sigma: var.max(S::zero()).sqrt(),
        }
    }

    /// Axis-aligned bounding box `((mu_lo, mu_hi), (sigma_lo, sigma_hi))`.
    pub fn bounding_box(&self) -> ((S, S), (S, S)) {
        let n = S::from_usize_lossy(self.center.n_eff as usize);
        let sb = self.center.sigma_bar;
        let dmu = (self.kappa / (n * self.dt)).sqrt() * sb;
        let dv = (S::lit(2.0) * self.kappa / n).sqrt();
        let lo = (sb * sb * (S::one() - dv)).max(S::zero()).sqrt();
        let hi = (sb * sb * (S::one() + dv)).sqrt();
        (
            (self.center.mu_bar - dmu, self.center.mu_bar + dmu),
            (lo, hi),
        )
    }
}

/// Known-volatility drift interval `mu_bar -/+ sigma q / sqrt(n dt)` with
/// `q = Phi^{-1}(1 - alpha / 2)`.
pub fn drift_interval<S: Scalar>(
    b: &Beliefs<S>,
    sigma_known: S,
    alpha: S,
    dt: S,
) -> Result<(S, S)> {
    if !(alpha > S::zero() && alpha < S::one()) {
        return Err(Error::invalid(format!(
            "alpha must be in (0, 1), got {alpha}"
        )));
    }
    if !(dt > S::zero()) || !(sigma_known >= S::zero()) {
        return Err(Error::invalid("drift interval needs dt > 0 and sigma >= 0"));
    }
    let q = S::lit(standard_normal_quantile(1.0 - alpha.as_f64() / 2.0));
    let n = S::from_usize_lossy(b.n_eff as usize);
    let half = sigma_known * q / (n * dt).sqrt();
    Ok((b.mu_bar - half, b.mu_bar + half))
}

pub(crate) fn standard_normal_quantile(p: f64) -> f64 {
    Normal::standard().inverse_cdf(p)
}

/// Closed-form `chi^2(2)` quantile, `-2 ln(1 - p)`.
pub fn chi2_quantile_2dof<S: Scalar>(p: S) -> Result<S> {
    if !(p > S::zero() && p < S::one()) {
        return Err(Error::invalid(format!(
            "probability must be in (0, 1), got {p}"
        )));
    }
    Ok(-S::lit(2.0) * (-p).ln_1p())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn e(kappa: f64) -> UncertaintyEllipsoid {
        uncertainty_set(&Beliefs::new(0.1, 0.2, 10), kappa, 1.0).unwrap()
    }

    #[test]
    fn chi2_examples() {
        assert_abs_diff_eq!(chi2_quantile_2dof(0.9).unwrap(), 4.6052, epsilon = 1e-4);
        assert_abs_diff_eq!(chi2_quantile_2dof(0.5).unwrap(), 1.3863, epsilon = 1e-4);
        assert!(chi2_quantile_2dof(1e-12).unwrap() < 1e-11);
        assert!(chi2_quantile_2dof(0.0).is_err());
        assert!(chi2_quantile_2dof(1.0).is_err());
        let mut prev = 0.0;
        for i in 1..1000 {
            let p = i as f64 / 1000.0;
            let q = chi2_quantile_2dof(p).unwrap();
            assert!(q > prev);
            assert_abs_diff_eq!(q, -2.0 * (1.0 - p).ln(), epsilon = 1e-12 * q.max(1.0));
            prev = q;
        }
    }

    #[test]
    fn singleton_and_center() {
        let s = e(0.0);
        assert!(s.contains(&ModelParams::new(0.1, 0.2)));
        assert!(!s.contains(&ModelParams::new(0.1 + 1e-6, 0.2)));
        assert_eq!(e(4.61).constraint(&ModelParams::new(0.1, 0.2)), 0.0);
        for i in 0..16 {
            let p = s.point(i as f64 * 0.4, 0.0).unwrap();
            assert_eq!(p, ModelParams::new(0.1, 0.2));
        }
    }

    #[test]
    fn boundary_example() {
        let s = e(4.61);
        let p = s.point(PI, 4.61).unwrap();
        assert_abs_diff_eq!(p.mu, -0.0358, epsilon = 5e-4);
        assert_abs_diff_eq!(p.sigma, 0.2, epsilon = 1e-12);
        assert_abs_diff_eq!(s.constraint(&p), 4.61, epsilon = 1e-10);
        assert_abs_diff_eq!(
            s.constraint(&ModelParams::new(-0.0358, 0.2)),
            4.61,
            epsilon = 2e-2
        );
    }

    #[test]
    fn variance_clamp() {
        let s = uncertainty_set(&Beliefs::new(0.1, 0.2, 2), 9.0, 1.0).unwrap();
        let p = s.point(1.5 * PI, 9.0).unwrap();
        assert_eq!(p.sigma, 0.0);
        assert!(s.point(0.0, 9.5).is_err());
        assert!(s.point(0.0, -0.1).is_err());
    }

    #[test]
    fn degenerate_center_rejected() {
        assert!(uncertainty_set(&Beliefs::new(0.1, 0.0, 3), 1.0, 1.0).is_err());
        assert!(uncertainty_set(&Beliefs::new(0.1, 0.0, 3), 0.0, 1.0).is_ok());
        assert!(uncertainty_set(&Beliefs::new(0.1, 0.2, 3), -1.0, 1.0).is_err());
    }

    #[test]
    fn drift_interval_examples() {
        let b = Beliefs::new(0.1, 0.3, 100);
        let (lo, hi) = drift_interval(&b, 0.2, 0.05, 1.0).unwrap();
        assert_abs_diff_eq!(lo, 0.06080, epsilon = 1e-5);
        assert_abs_diff_eq!(hi, 0.13920, epsilon = 1e-5);
        assert_abs_diff_eq!(hi - 0.1, 0.1 - lo, epsilon = 1e-15);
        let (lo, hi) = drift_interval(&b, 0.2, 1.0 - 1e-9, 1.0).unwrap();
        assert!(hi - lo < 1e-9);
        assert!(drift_interval(&b, 0.2, 0.0, 1.0).is_err());
        assert!(drift_interval(&b, 0.2, 1.0, 1.0).is_err());
    }

    #[test]
    fn bounding_box_encloses_boundary() {
        let s = e(4.61);
        let ((ml, mh), (sl, sh)) = s.bounding_box();
        for i in 0..360 {
            let p = s.point(i as f64 * PI / 180.0, 4.61).unwrap();
            assert!(p.mu >= ml - 1e-12 && p.mu <= mh + 1e-12);
            assert!(p.sigma >= sl - 1e-12 && p.sigma <= sh + 1e-12);
        }
    }
}
