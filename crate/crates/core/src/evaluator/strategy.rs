use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::black_scholes::bs_delta;
use crate::dynamics::{uncertainty_set, AugmentedState, ModelParams, ProblemKind, ProblemSpec};
use crate::error::{Error, Result};
use crate::gp::{kernel_eval, Cholesky, KernelFamily, KernelSpec};
use crate::solver::{
    outer_optimize, price_scale, solve, Formulation, NextValue, PolicyBundle, SolverConfig,
    StepContext,
};

/// Unconstrained Merton fraction `(mu - r) / (gamma sigma^2)`.
pub fn merton_control(theta: &ModelParams, r: f64, gamma: f64) -> Result<f64> {
    if !(theta.sigma > 0.0) {
        return Err(Error::invalid("Merton control needs sigma > 0"));
    }
    Ok((theta.mu - r) / (gamma * theta.sigma * theta.sigma))
}

/// Solves with the uncertainty set frozen at its initial value.
pub fn static_robust_solve(spec: &ProblemSpec, cfg: &SolverConfig) -> Result<PolicyBundle> {
    solve(
        spec,
        &SolverConfig {
            formulation: Formulation::StaticRobust,
            ..cfg.clone()
        },
    )
}

/// GP interpolation across a fixed parameter grid, with the kernel factor
/// computed once; only the right-hand side changes between queries.
#[derive(Clone, Debug)]
pub struct ThetaInterpolator {
    nodes: Vec<ModelParams>,
    lo: [f64; 2],
    span: [f64; 2],
    extent: [f64; 2],
    kernel: KernelSpec,
    chol: Cholesky,
}

impl ThetaInterpolator {
    pub fn new(nodes: Vec<ModelParams>, spacing: (usize, usize)) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::invalid("parameter grid is empty"));
        }
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for t in &nodes {
            lo[0] = lo[0].min(t.mu);
            hi[0] = hi[0].max(t.mu);
            lo[1] = lo[1].min(t.sigma);
            hi[1] = hi[1].max(t.sigma);
        }
        let span = [0, 1].map(|j| if hi[j] > lo[j] { hi[j] - lo[j] } else { 1.0 });
        let extent = [0, 1].map(|j| (hi[j] - lo[j]) / span[j]);
        let ls = [spacing.0, spacing.1].map(|m| 2.0 / (m.max(2) - 1) as f64);
        let kernel = KernelSpec::new(KernelFamily::Matern52, 1.0, ls.to_vec())?;
        let unit: Vec<[f64; 2]> = nodes
            .iter()
            .map(|t| [(t.mu - lo[0]) / span[0], (t.sigma - lo[1]) / span[1]])
            .collect();
        let n = nodes.len();
        let mut k = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                k[i * n + j] = kernel_eval(&kernel, &unit[i], &unit[j])?;
            }
            k[i * n + i] += kernel.nugget * kernel.nugget;
        }
        let chol = Cholesky::factor(&k, n)?;
        Ok(ThetaInterpolator {
            nodes,
            lo,
            span,
            extent,
            kernel,
            chol,
        })
    }

    pub fn nodes(&self) -> &[ModelParams] {
        &self.nodes
    }

    /// Interpolates node values at `theta`, clamped into the grid's bounding box.
    pub fn interpolate(&self, values: &[f64], theta: &ModelParams) -> Result<f64> {
        if values.len() != self.nodes.len() {
            return Err(Error::Dimension {
                expected: self.nodes.len(),
                got: values.len(),
            });
        }
        let q = [
            ((theta.mu - self.lo[0]) / self.span[0]).clamp(0.0, self.extent[0]),
            ((theta.sigma - self.lo[1]) / self.span[1]).clamp(0.0, self.extent[1]),
        ];
        let alpha = self.chol.solve(values);
        let mut acc = 0.0;
        for (t, a) in self.nodes.iter().zip(&alpha) {
            let node = [
                (t.mu - self.lo[0]) / self.span[0],
                (t.sigma - self.lo[1]) / self.span[1],
            ];
            acc += a * kernel_eval(&self.kernel, &q, &node)?;
        }
        Ok(acc)
    }
}

/// Myopic-adaptive controls: the fixed-parameter solution evaluated at the
/// latest beliefs.
#[derive(Clone, Debug)]
pub enum MyopicTable {
    /// Closed-form fixed-parameter portfolio control.
    Merton { r: f64, gamma: f64 },
    /// Fixed-parameter hedging policies solved on a parameter grid.
    Hedging {
        bundles: Vec<Arc<PolicyBundle>>,
        interpolator: ThetaInterpolator,
    },
}

/// Builds the myopic-adaptive table over the bounding box of the initial
/// uncertainty set, `grid = (n_mu, n_sigma)` nodes. Each hedging node is a
/// fixed-parameter solve with `cfg`.
pub fn myopic_adaptive_table(
    spec: &ProblemSpec,
    grid: (usize, usize),
    cfg: &SolverConfig,
) -> Result<MyopicTable> {
    match spec.kind {
        ProblemKind::Portfolio { gamma } => Ok(MyopicTable::Merton { r: spec.r, gamma }),
        ProblemKind::Hedging { .. } => {
            if grid.0 < 1 || grid.1 < 1 {
                return Err(Error::invalid(
                    "myopic grid needs at least one node per axis",
                ));
            }
            let set = uncertainty_set(&spec.initial_beliefs(), spec.kappa(), spec.dt)?;
            let ((mlo, mhi), (slo, shi)) = set.bounding_box();
            let axis = |lo: f64, hi: f64, n: usize, c: f64| -> Vec<f64> {
                if n == 1 {
                    vec![c]
                } else {
                    (0..n)
                        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
                        .collect()
                }
            };
            let mut nodes = Vec::with_capacity(grid.0 * grid.1);
            for mu in axis(mlo, mhi, grid.0, spec.prior.mu) {
                for sigma in axis(slo.max(1e-4), shi, grid.1, spec.prior.sigma) {
                    nodes.push(ModelParams::new(mu, sigma));
                }
            }
            let mut bundles = Vec::with_capacity(nodes.len());
            for (i, theta) in nodes.iter().enumerate() {
                let node_cfg = SolverConfig {
                    formulation: Formulation::FixedParameter { theta: *theta },
                    ..cfg.clone()
                };
                log::info!(
                    "myopic table node {}/{}: mu {:.4}, sigma {:.4}",
                    i + 1,
                    nodes.len(),
                    theta.mu,
                    theta.sigma
                );
                bundles.push(Arc::new(solve(spec, &node_cfg)?));
            }
            let interpolator = ThetaInterpolator::new(nodes, grid)?;
            Ok(MyopicTable::Hedging {
                bundles,
                interpolator,
            })
        }
    }
}

/// Control at `t_0` from a bundle: the outer optimization at `x0` against the
/// step-1 surrogate (or the terminal condition when `K = 1`), projected.
pub fn bundle_initial_control(bundle: &PolicyBundle, x0: &AugmentedState) -> Result<f64> {
    let spec = &bundle.spec;
    let next = match bundle.step(1) {
        Some(step) => NextValue::Surrogate {
            gp: &step.value,
            features: bundle.features,
        },
        None if spec.steps == 1 => NextValue::Terminal(bundle.terminal),
        None => return Err(Error::invalid("bundle lacks the step-1 solution")),
    };
    let flat = bundle.config.flat_threshold * price_scale(spec)?;
    let ctx = StepContext::new(spec, &bundle.config, next, flat);
    let r = outer_optimize(x0, &ctx, &bundle.quadrature)?;
    Ok(spec.project(r.u))
}

/// A feedback strategy `(k, state) -> control` in the admissible set.
#[derive(Clone, Debug)]
pub enum StrategyKind {
    AdaptiveRobust(Arc<PolicyBundle>),
    StaticRobust(Arc<PolicyBundle>),
    MyopicAdaptive(Arc<MyopicTable>),
    /// Hedging: Black-Scholes delta at the current volatility estimate.
    /// Portfolio: Merton fraction at the current beliefs.
    AdaptiveDelta,
    /// Merton fraction (portfolio) or Black-Scholes delta (hedging) at a fixed parameter.
    MertonStatic(ModelParams),
    Constant(f64),
}

impl StrategyKind {
    pub fn name(&self) -> &'static str {
        match self {
            StrategyKind::AdaptiveRobust(_) => "adaptive_robust",
            StrategyKind::StaticRobust(_) => "static_robust",
            StrategyKind::MyopicAdaptive(_) => "myopic_adaptive",
            StrategyKind::AdaptiveDelta => "adaptive_delta",
            StrategyKind::MertonStatic(_) => "merton_static",
            StrategyKind::Constant(_) => "constant",
        }
    }

    fn plug_in(&self, spec: &ProblemSpec, x: &AugmentedState, theta: &ModelParams) -> Result<f64> {
        match spec.kind {
            ProblemKind::Portfolio { gamma } => {
                Ok(spec.project(merton_control(theta, spec.r, gamma)?))
            }
            ProblemKind::Hedging { strike, .. } => {
                let s = x
                    .market
                    .price()
                    .ok_or_else(|| Error::invalid("hedging strategy on a portfolio state"))?;
                bs_delta(
                    spec.time(x.k),
                    s,
                    strike,
                    spec.r,
                    theta.sigma,
                    spec.horizon(),
                )
            }
        }
    }

    /// Control at `t_0`; computed once per evaluation since every path starts at `x0`.
    pub fn initial_control(&self, spec: &ProblemSpec, x0: &AugmentedState) -> Result<f64> {
        match self {
            StrategyKind::AdaptiveRobust(b) | StrategyKind::StaticRobust(b) => {
                bundle_initial_control(b, x0)
            }
            StrategyKind::MyopicAdaptive(t) => match t.as_ref() {
                MyopicTable::Hedging {
                    bundles,
                    interpolator,
                } => {
                    let values = bundles
                        .iter()
                        .map(|b| bundle_initial_control(b, x0))
                        .collect::<Result<Vec<_>>>()?;
                    Ok(spec.project(interpolator.interpolate(&values, &x0.beliefs.params())?))
                }
                MyopicTable::Merton { .. } => self.control(spec, x0),
            },
            _ => self.control(spec, x0),
        }
    }

    /// Control at an interior step `x.k >= 1` (any step for closed-form strategies).
    pub fn control(&self, spec: &ProblemSpec, x: &AugmentedState) -> Result<f64> {
        match self {
            StrategyKind::AdaptiveRobust(b) | StrategyKind::StaticRobust(b) => b.control_at(x),
            StrategyKind::MyopicAdaptive(t) => match t.as_ref() {
                MyopicTable::Merton { r, gamma } => {
                    Ok(spec.project(merton_control(&x.beliefs.params(), *r, *gamma)?))
                }
                MyopicTable::Hedging {
                    bundles,
                    interpolator,
                } => {
                    let values = bundles
                        .iter()
                        .map(|b| b.control_at(x))
                        .collect::<Result<Vec<_>>>()?;
                    Ok(spec.project(interpolator.interpolate(&values, &x.beliefs.params())?))
                }
            },
            StrategyKind::AdaptiveDelta => self.plug_in(spec, x, &x.beliefs.params()),
            StrategyKind::MertonStatic(theta) => self.plug_in(spec, x, theta),
            StrategyKind::Constant(u) => Ok(spec.project(*u)),
        }
    }
}

/// Serializable strategy selector used in configuration files.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyName {
    AdaptiveRobust,
    StaticRobust,
    MyopicAdaptive,
    AdaptiveDelta,
    MertonStatic,
    Constant,
}
