use serde::{Deserialize, Serialize};

use crate::dynamics::{ModelParams, ProblemSpec};
use crate::error::{Error, Result};
use crate::gp::{KernelFamily, DEFAULT_NUGGET};

/// Which uncertainty set the inner optimization ranges over.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Formulation {
    /// Ellipsoid around the current beliefs.
    AdaptiveRobust,
    /// Plug-in of the current beliefs (singleton set).
    Adaptive,
    /// Ellipsoid frozen at the initial beliefs for every step.
    StaticRobust,
    /// A known parameter, no learning.
    FixedParameter { theta: ModelParams },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntegratorKind {
    Quadrature,
    MonteCarlo,
}

/// Design sizes per time step. The portfolio design has `n_qmc + n_adaptive`
/// sites; the hedging design has `n_pilot` sites of which `n_qmc` are
/// hull-filling and `n_edge` sit on uncertainty-set boundaries.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignSizes {
    pub n_pilot: usize,
    pub n_qmc: usize,
    pub n_adaptive: usize,
    pub n_edge: usize,
}

impl DesignSizes {
    pub fn portfolio_default() -> Self {
        DesignSizes {
            n_pilot: 250,
            n_qmc: 100,
            n_adaptive: 50,
            n_edge: 0,
        }
    }

    pub fn hedging_default() -> Self {
        DesignSizes {
            n_pilot: 250,
            n_qmc: 100,
            n_adaptive: 0,
            n_edge: 25,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub formulation: Formulation,
    pub design: DesignSizes,
    /// Number of quadrature knots or Monte Carlo draws per expectation.
    pub quadrature_size: usize,
    pub integrator: IntegratorKind,
    /// Hedging inner grid `(n_phi, n_rho)`; `n_rho` counts the center.
    pub inner_grid: (usize, usize),
    /// Coarse angle scan before the local search of the portfolio inner problem.
    pub phi_scan: usize,
    /// Coarse control scan before the local search of the outer problem.
    pub u_scan: usize,
    /// Brent tolerance of the inner search over the uncertainty set.
    pub tolerance: f64,
    /// Brent tolerance of the outer search over controls.
    pub control_tolerance: f64,
    pub kernel: KernelFamily,
    pub nugget: f64,
    /// Nugget of the control surrogate. Smooths search noise and the steep
    /// switch between zero and full investment.
    pub control_nugget: f64,
    /// Start each step's likelihood search from the previous step's hyperparameters.
    pub warm_start: bool,
    /// Reuse the first fitted hyperparameters for every later step.
    pub freeze_hyperparameters: bool,
    /// Flat-region threshold for hedging, relative to the initial option price.
    pub flat_threshold: f64,
    /// Hedging site wealth is drawn from this multiple range of the option price.
    pub wealth_range: (f64, f64),
    pub seed: u64,
}

impl SolverConfig {
    pub fn portfolio_default() -> Self {
        SolverConfig {
            formulation: Formulation::AdaptiveRobust,
            design: DesignSizes::portfolio_default(),
            quadrature_size: 100,
            integrator: IntegratorKind::Quadrature,
            inner_grid: (16, 8),
            phi_scan: 16,
            u_scan: 8,
            tolerance: 1e-6,
            control_tolerance: 1e-5,
            kernel: KernelFamily::Matern52,
            nugget: DEFAULT_NUGGET,
            control_nugget: 0.1,
            warm_start: true,
            freeze_hyperparameters: false,
            flat_threshold: 1e-8,
            wealth_range: (0.5, 1.5),
            seed: 42,
        }
    }

    pub fn hedging_default() -> Self {
        SolverConfig {
            design: DesignSizes::hedging_default(),
            quadrature_size: 40,
            control_tolerance: 1e-3,
            ..SolverConfig::portfolio_default()
        }
    }

    pub fn default_for(spec: &ProblemSpec) -> Self {
        if spec.is_portfolio() {
            Self::portfolio_default()
        } else {
            Self::hedging_default()
        }
    }

    pub fn validate(&self, spec: &ProblemSpec) -> Result<()> {
        let d = &self.design;
        if spec.is_portfolio() {
            if d.n_qmc + d.n_adaptive < 10 {
                return Err(Error::invalid(
                    "design.n_qmc + design.n_adaptive must be at least 10",
                ));
            }
            if d.n_pilot < 3 {
                return Err(Error::invalid("design.n_pilot must be at least 3"));
            }
        } else {
            if d.n_pilot < 10 {
                return Err(Error::invalid("design.n_pilot must be at least 10"));
            }
            if d.n_qmc + d.n_edge > d.n_pilot {
                return Err(Error::invalid(
                    "design.n_qmc + design.n_edge must not exceed design.n_pilot",
                ));
            }
            if d.n_pilot - d.n_qmc - d.n_edge < 4 && d.n_qmc > 0 {
                return Err(Error::invalid(
                    "hedging design keeps too few pilot sites to span a hull",
                ));
            }
        }
        if self.quadrature_size < 2 {
            return Err(Error::invalid("quadrature_size must be at least 2"));
        }
        if self.inner_grid.0 < 1 || self.inner_grid.1 < 1 {
            return Err(Error::invalid("inner_grid sizes must be at least 1"));
        }
        if self.phi_scan < 3 {
            return Err(Error::invalid("phi_scan must be at least 3"));
        }
        if self.u_scan < 2 {
            return Err(Error::invalid("u_scan must be at least 2"));
        }
        if !(self.tolerance > 0.0) || !(self.control_tolerance > 0.0) {
            return Err(Error::invalid("tolerances must be positive"));
        }
        if !(self.nugget >= 0.0) || !(self.control_nugget >= 0.0) {
            return Err(Error::invalid("nuggets must be nonnegative"));
        }
        if !(self.flat_threshold >= 0.0) {
            return Err(Error::invalid("flat_threshold must be nonnegative"));
        }
        let (lo, hi) = self.wealth_range;
        if !(lo > 0.0 && hi > lo) {
            return Err(Error::invalid("wealth_range must satisfy 0 < lo < hi"));
        }
        if let Formulation::FixedParameter { theta } = self.formulation {
            if !(theta.sigma >= 0.0) || !theta.mu.is_finite() || !theta.sigma.is_finite() {
                return Err(Error::invalid(
                    "fixed-parameter theta must be finite with sigma >= 0",
                ));
            }
        }
        Ok(())
    }
}
