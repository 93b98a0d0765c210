use std::f64::consts::TAU;

use super::bundle::{NextValue, WorstCase};
use super::config::{Formulation, SolverConfig};
use crate::dynamics::{
    transition_hedging, uncertainty_set, update_beliefs, AugmentedState, Beliefs, Market,
    ModelParams, ProblemKind, ProblemSpec, UncertaintyEllipsoid,
};
use crate::error::{Error, Result};
use crate::numerics::{minimize_scalar_try, QuadratureRule};

/// Lower bound on the one-period gross portfolio return. Keeps power utility
/// finite when extreme shocks meet leveraged or short positions.
pub const GROSS_RETURN_FLOOR: f64 = 1e-6;

/// Everything the per-site optimization needs at one step.
#[derive(Clone, Copy, Debug)]
pub struct StepContext<'a> {
    pub spec: &'a ProblemSpec,
    pub formulation: Formulation,
    pub kappa: f64,
    pub next: NextValue<'a>,
    pub inner_grid: (usize, usize),
    pub phi_scan: usize,
    pub u_scan: usize,
    pub tol: f64,
    pub u_tol: f64,
    /// Absolute hedging flat-region threshold.
    pub flat_threshold: f64,
}

impl<'a> StepContext<'a> {
    pub fn new(
        spec: &'a ProblemSpec,
        cfg: &SolverConfig,
        next: NextValue<'a>,
        flat_threshold: f64,
    ) -> Self {
        StepContext {
            spec,
            formulation: cfg.formulation,
            kappa: spec.kappa(),
            next,
            inner_grid: cfg.inner_grid,
            phi_scan: cfg.phi_scan,
            u_scan: cfg.u_scan,
            tol: cfg.tolerance,
            u_tol: cfg.control_tolerance,
            flat_threshold,
        }
    }

    /// Uncertainty set the adversary ranges over at `x`.
    pub fn uncertainty(&self, x: &AugmentedState) -> Result<UncertaintyEllipsoid> {
        let dt = self.spec.dt;
        match self.formulation {
            Formulation::AdaptiveRobust => uncertainty_set(&x.beliefs, self.kappa, dt),
            Formulation::Adaptive => uncertainty_set(&x.beliefs, 0.0, dt),
            Formulation::StaticRobust => {
                uncertainty_set(&self.spec.initial_beliefs(), self.kappa, dt)
            }
            Formulation::FixedParameter { theta } => {
                uncertainty_set(&Beliefs::new(theta.mu, theta.sigma, self.spec.k0), 0.0, dt)
            }
        }
    }

    /// `sum_i w_i V(t_{k+1}, T(x, u, theta, z_i))`.
    pub fn propagate(
        &self,
        x: &AugmentedState,
        u: f64,
        theta: &ModelParams,
        rule: &QuadratureRule,
    ) -> Result<f64> {
        let spec = self.spec;
        let mut acc = 0.0;
        match (spec.kind, x.market) {
            (ProblemKind::Portfolio { .. }, Market::Portfolio { wealth }) => {
                let rdt = spec.r * spec.dt;
                let sdt = spec.dt.sqrt();
                for (z, w) in rule.iter() {
                    let g = (theta.mu * spec.dt + theta.sigma * sdt * z).exp();
                    let growth = (1.0 + rdt + u * (g - 1.0 - rdt)).max(GROSS_RETURN_FLOOR);
                    let next = AugmentedState {
                        market: Market::Portfolio {
                            wealth: wealth * growth,
                        },
                        beliefs: update_beliefs(&x.beliefs, theta, z, spec.dt),
                        k: x.k + 1,
                    };
                    acc += w * self.next.eval(spec, &next)?;
                }
            }
            (ProblemKind::Hedging { .. }, Market::Hedging { .. }) => {
                for (z, w) in rule.iter() {
                    let next = transition_hedging(x, u, theta, z, spec)?;
                    acc += w * self.next.eval(spec, &next)?;
                }
            }
            _ => return Err(Error::invalid("state kind does not match the problem")),
        }
        if !acc.is_finite() {
            return Err(Error::non_finite(format!("propagated value at u = {u}")));
        }
        Ok(acc)
    }
}

/// Result of the inner optimization over the uncertainty set.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InnerResult {
    pub worst_case: WorstCase,
    pub value: f64,
}

fn singleton(
    ctx: &StepContext,
    x: &AugmentedState,
    u: f64,
    set: &UncertaintyEllipsoid,
    rule: &QuadratureRule,
) -> Result<InnerResult> {
    let theta = set.center.params();
    Ok(InnerResult {
        worst_case: WorstCase {
            phi: None,
            rho: None,
            mu: theta.mu,
            sigma: theta.sigma,
        },
        value: ctx.propagate(x, u, &theta, rule)?,
    })
}

/// Coarse scan followed by a bracketed Brent search around the best scan point.
/// With `periodic`, the scan excludes `hi` and the bracket may leave `[lo, hi]`.
/// Returns `(argmin, min, scan values)`.
fn scan_minimize<F: FnMut(f64) -> Result<f64>>(
    mut f: F,
    lo: f64,
    hi: f64,
    n_scan: usize,
    tol: f64,
    periodic: bool,
) -> Result<(f64, f64, Vec<f64>)> {
    let h = (hi - lo) / n_scan as f64;
    let count = if periodic { n_scan } else { n_scan + 1 };
    let mut values = Vec::with_capacity(count);
    for j in 0..count {
        let x = if !periodic && j == n_scan {
            hi
        } else {
            lo + h * j as f64
        };
        values.push(f(x)?);
    }
    let mut best = 0;
    for (j, v) in values.iter().enumerate() {
        if *v < values[best] {
            best = j;
        }
    }
    let x_best = if !periodic && best == n_scan {
        hi
    } else {
        lo + h * best as f64
    };
    let (a, b) = if periodic {
        (x_best - h, x_best + h)
    } else {
        ((x_best - h).max(lo), (x_best + h).min(hi))
    };
    let local = minimize_scalar_try(&mut f, a, b, tol)?;
    if local.value < values[best] {
        Ok((local.x, local.value, values))
    } else {
        Ok((x_best, values[best], values))
    }
}

/// Infimum over the boundary of the portfolio uncertainty set, parameterized by angle.
pub fn inner_worst_case_portfolio(
    x: &AugmentedState,
    u: f64,
    ctx: &StepContext,
    rule: &QuadratureRule,
) -> Result<InnerResult> {
    let set = ctx.uncertainty(x)?;
    if set.is_singleton() {
        return singleton(ctx, x, u, &set, rule);
    }
    let kappa = set.kappa;
    let (phi, value, _) = scan_minimize(
        |phi| ctx.propagate(x, u, &set.point_unchecked(phi, kappa), rule),
        0.0,
        TAU,
        ctx.phi_scan,
        ctx.tol,
        true,
    )?;
    let phi = phi.rem_euclid(TAU);
    let theta = set.point_unchecked(phi, kappa);
    Ok(InnerResult {
        worst_case: WorstCase {
            phi: Some(phi),
            rho: Some(kappa),
            mu: theta.mu,
            sigma: theta.sigma,
        },
        value,
    })
}

/// `(phi, rho)` grid: the center first, then `n_rho - 1` radii up to kappa,
/// each with `n_phi` equally spaced angles.
pub fn hedging_grid(kappa: f64, grid: (usize, usize)) -> Vec<(f64, f64)> {
    let (n_phi, n_rho) = grid;
    let mut pts = vec![(0.0, 0.0)];
    for l in 1..n_rho {
        let rho = kappa * l as f64 / (n_rho - 1) as f64;
        for j in 0..n_phi {
            pts.push((TAU * j as f64 / n_phi as f64, rho));
        }
    }
    pts
}

/// Supremum over a discrete `(phi, rho)` grid of the hedging uncertainty set;
/// ties keep the first grid point.
pub fn inner_worst_case_hedging(
    x: &AugmentedState,
    u: f64,
    ctx: &StepContext,
    rule: &QuadratureRule,
    grid: (usize, usize),
) -> Result<InnerResult> {
    let set = ctx.uncertainty(x)?;
    if set.is_singleton() {
        return singleton(ctx, x, u, &set, rule);
    }
    let mut best: Option<(f64, f64, ModelParams, f64)> = None;
    for (phi, rho) in hedging_grid(set.kappa, grid) {
        let theta = set.point_unchecked(phi, rho);
        let v = ctx.propagate(x, u, &theta, rule)?;
        if best.is_none_or(|b| v > b.3) {
            best = Some((phi, rho, theta, v));
        }
    }
    let (phi, rho, theta, value) = best.expect("grid has the center point");
    Ok(InnerResult {
        worst_case: WorstCase {
            phi: Some(phi),
            rho: Some(rho),
            mu: theta.mu,
            sigma: theta.sigma,
        },
        value,
    })
}

/// Outer optimization at one site.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OuterResult {
    /// Optimizer on the relaxed control domain.
    pub u: f64,
    pub value: f64,
    pub worst_case: WorstCase,
}

/// Portfolio: maximize the worst-case expected value over the relaxed domain.
/// Hedging: minimize the worst-case expected loss over the control domain,
/// returning 0 when every probed value is below the flat threshold.
pub fn outer_optimize(
    x: &AugmentedState,
    ctx: &StepContext,
    rule: &QuadratureRule,
) -> Result<OuterResult> {
    let (lo, hi) = ctx.spec.relaxed_control_domain;
    let portfolio = ctx.spec.is_portfolio();
    let mut best: Option<(f64, InnerResult)> = None;
    let mut inner = |u: f64| -> Result<f64> {
        let r = if portfolio {
            inner_worst_case_portfolio(x, u, ctx, rule)?
        } else {
            inner_worst_case_hedging(x, u, ctx, rule, ctx.inner_grid)?
        };
        let better = match &best {
            None => true,
            Some((_, b)) if portfolio => r.value > b.value,
            Some((_, b)) => r.value < b.value,
        };
        if better {
            best = Some((u, r));
        }
        Ok(if portfolio { -r.value } else { r.value })
    };
    let (_, _, scan) = scan_minimize(&mut inner, lo, hi, ctx.u_scan, ctx.u_tol, false)?;
    if !portfolio && scan.iter().all(|v| *v < ctx.flat_threshold) {
        let r = inner_worst_case_hedging(x, 0.0, ctx, rule, ctx.inner_grid)?;
        return Ok(OuterResult {
            u: 0.0,
            value: r.value,
            worst_case: r.worst_case,
        });
    }
    let (u, r) = best.expect("scan evaluated at least one control");
    Ok(OuterResult {
        u,
        value: r.value,
        worst_case: r.worst_case,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::crra_utility;
    use crate::gp::{GpSurrogate, KernelFamily, KernelSpec, PriorMean};
    use crate::numerics::gaussian_rule;
    use crate::solver::bundle::{FeatureMap, TerminalCondition};

    fn portfolio_ctx(spec: &ProblemSpec) -> StepContext<'_> {
        let cfg = SolverConfig::portfolio_default();
        StepContext::new(spec, &cfg, NextValue::Terminal(TerminalCondition::of(spec)), 0.0)
    }

    #[test]
    fn riskless_control_has_closed_form_value() {
        let spec = ProblemSpec::portfolio_default();
        let ctx = portfolio_ctx(&spec);
        let rule = gaussian_rule(20).unwrap();
        let x = AugmentedState::portfolio(1.0, Beliefs::new(0.1, 0.08, 5), 19);
        let want = crra_utility(1.001, 4.0).unwrap();
        for theta in [ModelParams::new(0.3, 0.5), ModelParams::new(-0.2, 0.01)] {
            let v = ctx.propagate(&x, 0.0, &theta, &rule).unwrap();
            assert!((v - want).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_radius_evaluates_the_center() {
        let mut spec = ProblemSpec::portfolio_default();
        spec.kappa = Some(0.0);
        let ctx = portfolio_ctx(&spec);
        let rule = gaussian_rule(20).unwrap();
        let x = AugmentedState::portfolio(1.0, Beliefs::new(0.1, 0.08, 5), 19);
        let r = inner_worst_case_portfolio(&x, 0.5, &ctx, &rule).unwrap();
        assert_eq!(r.worst_case.phi, None);
        assert_eq!((r.worst_case.mu, r.worst_case.sigma), (0.1, 0.08));
        let direct = ctx.propagate(&x, 0.5, &ModelParams::new(0.1, 0.08), &rule).unwrap();
        assert_eq!(r.value, direct);
    }

    #[test]
    fn worst_case_sits_north_west_and_shrinks_to_zero() {
        let spec = ProblemSpec::portfolio_default();
        let ctx = portfolio_ctx(&spec);
        let rule = gaussian_rule(30).unwrap();
        for (mu, sigma, n) in [(0.3, 0.1, 20), (0.5, 0.15, 12), (0.25, 0.08, 21)] {
            let x = AugmentedState::portfolio(1.0, Beliefs::new(mu, sigma, n), 19);
            let r = outer_optimize(&x, &ctx, &rule).unwrap();
            assert!(r.u > 0.05, "u = {}", r.u);
            assert!(r.worst_case.mu <= mu && r.worst_case.sigma >= sigma);
        }
        let x = AugmentedState::portfolio(1.0, Beliefs::new(spec.r, 0.1, 10), 19);
        let r = outer_optimize(&x, &ctx, &rule).unwrap();
        assert!(r.u.abs() < 1e-4, "u = {}", r.u);
    }

    #[test]
    fn finer_nested_grid_never_lowers_the_supremum() {
        let spec = ProblemSpec::hedging_default();
        let cfg = SolverConfig::hedging_default();
        let ctx = StepContext::new(&spec, &cfg, NextValue::Terminal(TerminalCondition::of(&spec)), 0.0);
        let rule = gaussian_rule(20).unwrap();
        for (s, w, u) in [(90.0, 5.0, 0.3), (100.0, 12.0, 0.6), (115.0, 20.0, 0.9)] {
            let x = AugmentedState::hedging(s, w, Beliefs::new(0.12, 0.4, 159), 9);
            let coarse = inner_worst_case_hedging(&x, u, &ctx, &rule, (16, 8)).unwrap();
            let fine = inner_worst_case_hedging(&x, u, &ctx, &rule, (64, 29)).unwrap();
            assert!(fine.value >= coarse.value);
        }
        assert_eq!(hedging_grid(1.0, (16, 8)).len(), 1 + 16 * 7);
        assert_eq!(hedging_grid(1.0, (16, 8))[0], (0.0, 0.0));
    }

    #[test]
    fn flat_losses_pick_zero_shares() {
        let spec = ProblemSpec::hedging_default();
        let cfg = SolverConfig::hedging_default();
        let ctx = StepContext::new(&spec, &cfg, NextValue::Terminal(TerminalCondition::of(&spec)), 1e-6);
        let rule = gaussian_rule(20).unwrap();
        let x = AugmentedState::hedging(1e-7, 0.0, Beliefs::new(0.12, 0.4, 159), 9);
        let r = outer_optimize(&x, &ctx, &rule).unwrap();
        assert_eq!(r.u, 0.0);
    }

    #[test]
    fn constant_continuation_keeps_the_first_control() {
        let spec = ProblemSpec::hedging_default();
        let cfg = SolverConfig::hedging_default();
        let x: Vec<Vec<f64>> = (0..6).map(|i| vec![80.0 + 8.0 * i as f64, 10.0, 0.12, 0.4]).collect();
        let kernel = KernelSpec::new(KernelFamily::Matern52, 1.0, vec![20.0, 5.0, 0.1, 0.1]).unwrap();
        let gp = GpSurrogate::new(&x, &[3.5; 6], kernel, PriorMean::OutputMean, None).unwrap();
        let next = NextValue::Surrogate {
            gp: &gp,
            features: FeatureMap::MarketBeliefs,
        };
        let ctx = StepContext::new(&spec, &cfg, next, 1e-6);
        let rule = gaussian_rule(10).unwrap();
        let site = AugmentedState::hedging(100.0, 10.0, Beliefs::new(0.12, 0.4, 155), 5);
        let r = outer_optimize(&site, &ctx, &rule).unwrap();
        assert_eq!(r.u, 0.0);
        assert!((r.value - 3.5).abs() < 1e-12);
        assert_eq!(outer_optimize(&site, &ctx, &rule).unwrap(), r);
    }
}
