use serde::{Deserialize, Serialize};

use super::config::{Formulation, SolverConfig};
use super::design::Provenance;
use crate::dynamics::{
    call_payoff, crra_utility, AugmentedState, Market, ProblemKind, ProblemSpec,
};
use crate::error::{Error, Result};
use crate::gp::GpSurrogate;
use crate::numerics::QuadratureRule;

/// Coordinates of an augmented state fed to the surrogates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureMap {
    /// `(mu_bar, sigma_bar)`; portfolio wealth enters through homogeneity.
    Beliefs,
    /// `(S, W, mu_bar, sigma_bar)`.
    MarketBeliefs,
    /// `(S, W)`.
    Market,
}

impl FeatureMap {
    pub fn for_problem(spec: &ProblemSpec, formulation: &Formulation) -> Self {
        match (spec.is_portfolio(), formulation) {
            (true, _) => FeatureMap::Beliefs,
            (false, Formulation::AdaptiveRobust | Formulation::Adaptive) => {
                FeatureMap::MarketBeliefs
            }
            (false, Formulation::StaticRobust | Formulation::FixedParameter { .. }) => {
                FeatureMap::Market
            }
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            FeatureMap::Beliefs | FeatureMap::Market => 2,
            FeatureMap::MarketBeliefs => 4,
        }
    }

    pub fn names(&self) -> &'static [&'static str] {
        match self {
            FeatureMap::Beliefs => &["mu_bar", "sigma_bar"],
            FeatureMap::MarketBeliefs => &["price", "wealth", "mu_bar", "sigma_bar"],
            FeatureMap::Market => &["price", "wealth"],
        }
    }

    #[inline]
    pub fn write(&self, x: &AugmentedState, out: &mut [f64]) {
        let b = &x.beliefs;
        match (self, x.market) {
            (FeatureMap::Beliefs, _) => {
                out[0] = b.mu_bar;
                out[1] = b.sigma_bar;
            }
            (FeatureMap::MarketBeliefs, m) => {
                out[0] = m.price().unwrap_or(0.0);
                out[1] = m.wealth();
                out[2] = b.mu_bar;
                out[3] = b.sigma_bar;
            }
            (FeatureMap::Market, m) => {
                out[0] = m.price().unwrap_or(0.0);
                out[1] = m.wealth();
            }
        }
    }

    pub fn features(&self, x: &AugmentedState) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.write(x, &mut out);
        out
    }
}

/// Analytic value at the horizon.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TerminalCondition {
    CrraUtility { gamma: f64 },
    HedgingLoss { strike: f64, lambda: f64 },
}

impl TerminalCondition {
    pub fn of(spec: &ProblemSpec) -> Self {
        match spec.kind {
            ProblemKind::Portfolio { gamma } => TerminalCondition::CrraUtility { gamma },
            ProblemKind::Hedging { strike, loss } => TerminalCondition::HedgingLoss {
                strike,
                lambda: loss.lambda,
            },
        }
    }

    pub fn value(&self, market: &Market) -> Result<f64> {
        match (*self, *market) {
            (TerminalCondition::CrraUtility { gamma }, Market::Portfolio { wealth }) => {
                crra_utility(wealth, gamma)
            }
            (
                TerminalCondition::HedgingLoss { strike, lambda },
                Market::Hedging { price, wealth },
            ) => {
                let h = call_payoff(price, strike) - wealth;
                Ok(h.max(0.0) + lambda * (-h).max(0.0))
            }
            _ => Err(Error::invalid(
                "terminal condition does not match the state kind",
            )),
        }
    }
}

/// Worst-case parameters found by the inner optimization.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorstCase {
    /// Absent for singleton sets.
    pub phi: Option<f64>,
    pub rho: Option<f64>,
    pub mu: f64,
    pub sigma: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SiteRecord {
    pub state: AugmentedState,
    pub provenance: Provenance,
    /// `v^n`, the optimized right-hand side.
    pub value: f64,
    /// `u-check^n` on the relaxed domain.
    pub control: f64,
    pub worst_case: WorstCase,
}

/// Fitted surrogates and raw per-site results for one interior step.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StepSolution {
    pub k: usize,
    pub value: GpSurrogate,
    pub control: GpSurrogate,
    pub sites: Vec<SiteRecord>,
}

/// Output of the backward recursion: one [`StepSolution`] per interior step
/// `k = 1..K-1` (stored in increasing `k`); the horizon is analytic.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PolicyBundle {
    pub spec: ProblemSpec,
    pub config: SolverConfig,
    pub features: FeatureMap,
    pub terminal: TerminalCondition,
    pub quadrature: QuadratureRule,
    pub steps: Vec<StepSolution>,
}

impl PolicyBundle {
    pub fn step(&self, k: usize) -> Option<&StepSolution> {
        if k == 0 {
            return None;
        }
        self.steps.get(k - 1).filter(|s| s.k == k)
    }

    /// Projected control-surrogate prediction at an interior step.
    pub fn control_at(&self, x: &AugmentedState) -> Result<f64> {
        let step = self
            .step(x.k)
            .ok_or_else(|| Error::invalid(format!("no control surrogate at step {}", x.k)))?;
        let mut buf = [0.0; 4];
        let f = &mut buf[..self.features.dim()];
        self.features.write(x, f);
        let u = step.control.predict_mean(f)?;
        if !u.is_finite() {
            return Err(Error::non_finite(format!(
                "control prediction at step {}",
                x.k
            )));
        }
        Ok(self.spec.project(u))
    }

    /// Value function estimate: analytic at the horizon, surrogate otherwise.
    pub fn value_at(&self, x: &AugmentedState) -> Result<f64> {
        if x.k == self.spec.steps {
            return self.terminal.value(&x.market);
        }
        let step = self
            .step(x.k)
            .ok_or_else(|| Error::invalid(format!("no value surrogate at step {}", x.k)))?;
        NextValue::Surrogate {
            gp: &step.value,
            features: self.features,
        }
        .eval(&self.spec, x)
    }
}

/// `V(t_{k+1}, .)` as seen from step `k`.
#[derive(Clone, Copy, Debug)]
pub enum NextValue<'a> {
    Terminal(TerminalCondition),
    Surrogate {
        gp: &'a GpSurrogate,
        features: FeatureMap,
    },
}

impl NextValue<'_> {
    /// Full value at `x`. Portfolio surrogates model the wealth-free factor
    /// and are rescaled by `y^(1-gamma)`; hedging values are floored at 0.
    #[inline]
    pub fn eval(&self, spec: &ProblemSpec, x: &AugmentedState) -> Result<f64> {
        match self {
            NextValue::Terminal(t) => t.value(&x.market),
            NextValue::Surrogate { gp, features } => {
                let mut buf = [0.0; 4];
                let f = &mut buf[..features.dim()];
                features.write(x, f);
                let v = gp.predict_mean(f)?;
                match spec.kind {
                    ProblemKind::Portfolio { gamma } => Ok(x.market.wealth().powf(1.0 - gamma) * v),
                    ProblemKind::Hedging { .. } => Ok(v.max(0.0)),
                }
            }
        }
    }
}
