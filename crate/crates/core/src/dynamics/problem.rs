use serde::{Deserialize, Serialize};

use super::{chi2_quantile_2dof, Beliefs, LossFunction, ModelParams};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProblemKind<S = f64> {
    /// Maximize CRRA utility of terminal wealth; control is the risky fraction.
    Portfolio { gamma: S },
    /// Minimize expected loss of the short-call hedging error; control is
    /// the number of shares held.
    Hedging { strike: S, loss: LossFunction<S> },
}

/// Everything that defines one control problem instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec<S = f64> {
    pub kind: ProblemKind<S>,
    /// Risk-free rate per unit time.
    pub r: S,
    pub dt: S,
    pub steps: usize,
    /// Robustness level; the set radius is the `(1 - alpha)` chi-square quantile.
    pub alpha: S,
    /// Explicit radius, overriding the one implied by `alpha`.
    pub kappa: Option<S>,
    /// Effective observation count carried by the beliefs at `k = 0`.
    pub k0: u32,
    /// Initial point estimates.
    pub prior: ModelParams<S>,
    pub control_domain: (S, S),
    pub relaxed_control_domain: (S, S),
}

impl<S: Scalar> ProblemSpec<S> {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::invalid(m));
        if !(self.dt > S::zero()) || !self.dt.is_finite() {
            return bad(format!("dt must be > 0, got {}", self.dt));
        }
        if self.steps < 1 {
            return bad("steps must be >= 1".into());
        }
        if !self.r.is_finite() {
            return bad("r must be finite".into());
        }
        if !(self.alpha > S::zero() && self.alpha <= S::one()) {
            return bad(format!("alpha must be in (0, 1], got {}", self.alpha));
        }
        if let Some(k) = self.kappa {
            if !(k >= S::zero()) || !k.is_finite() {
                return bad(format!("kappa must be >= 0, got {k}"));
            }
        }
        if self.k0 < 1 {
            return bad("k0 must be >= 1".into());
        }
        if !(self.prior.sigma >= S::zero()) || !self.prior.mu.is_finite() {
            return bad("prior sigma must be >= 0".into());
        }
        let (lo, hi) = self.control_domain;
        let (rlo, rhi) = self.relaxed_control_domain;
        if !(lo <= hi) || !(rlo <= lo) || !(hi <= rhi) {
            return bad(
                "control domain must be an interval contained in the relaxed domain".into(),
            );
        }
        match self.kind {
            ProblemKind::Portfolio { gamma } => {
                if !(gamma > S::zero()) || (gamma - S::one()).abs() < S::epsilon() {
                    return bad(format!("gamma must be > 0 and != 1, got {gamma}"));
                }
            }
            ProblemKind::Hedging { strike, loss } => {
                if !(strike > S::zero()) {
                    return bad(format!("strike must be > 0, got {strike}"));
                }
                if !(loss.lambda >= S::zero()) {
                    return bad(format!("loss lambda must be >= 0, got {}", loss.lambda));
                }
            }
        }
        Ok(())
    }

    /// Radius of the confidence ellipsoid.
    pub fn kappa(&self) -> S {
        match self.kappa {
            Some(k) => k,
            None if self.alpha >= S::one() => S::zero(),
            None => chi2_quantile_2dof(S::one() - self.alpha).unwrap_or(S::zero()),
        }
    }

    pub fn horizon(&self) -> S {
        self.dt * S::from_usize_lossy(self.steps)
    }

    pub fn time(&self, k: usize) -> S {
        self.dt * S::from_usize_lossy(k)
    }

    /// Effective count of the beliefs along a path at step `k`.
    pub fn n_eff_at(&self, k: usize) -> u32 {
        self.k0 + k as u32
    }

    pub fn initial_beliefs(&self) -> Beliefs<S> {
        Beliefs::new(self.prior.mu, self.prior.sigma, self.k0)
    }

    pub fn is_portfolio(&self) -> bool {
        matches!(self.kind, ProblemKind::Portfolio { .. })
    }

    /// Projection onto the admissible control domain.
    pub fn project(&self, u: S) -> S {
        crate::scalar::clamp(u, self.control_domain.0, self.control_domain.1)
    }
}

impl ProblemSpec<f64> {
    /// Portfolio defaults: r = 0.02, T = 1, dt = 0.05, alpha = 0.1, gamma = 4,
    /// starting beliefs (0.1, 0.08).
    pub fn portfolio_default() -> Self {
        ProblemSpec {
            kind: ProblemKind::Portfolio { gamma: 4.0 },
            r: 0.02,
            dt: 0.05,
            steps: 20,
            alpha: 0.1,
            kappa: None,
            k0: 1,
            prior: ModelParams::new(0.1, 0.08),
            control_domain: (0.0, 1.0),
            relaxed_control_domain: (-0.2, 1.2),
        }
    }

    /// Hedging defaults: r = 0, T = 1, dt = 0.1, k0 = 150, alpha = 0.1,
    /// starting beliefs (0.12, 0.4), strike 100, lambda = 0.75.
    pub fn hedging_default() -> Self {
        ProblemSpec {
            kind: ProblemKind::Hedging {
                strike: 100.0,
                loss: LossFunction { lambda: 0.75 },
            },
            r: 0.0,
            dt: 0.1,
            steps: 10,
            alpha: 0.1,
            kappa: None,
            k0: 150,
            prior: ModelParams::new(0.12, 0.4),
            control_domain: (0.0, 1.0),
            relaxed_control_domain: (0.0, 1.0),
        }
    }
}
