use rand::Rng;
use serde::{Deserialize, Serialize};

use super::bundle::StepSolution;
use super::config::{DesignSizes, SolverConfig};
use crate::dynamics::{
    transition, uncertainty_set, AugmentedState, Beliefs, ModelParams, ProblemKind, ProblemSpec,
};
use crate::error::{Error, Result};
use crate::evaluator::bs_price;
use crate::numerics::{convex_hull, convex_hull_3d, standard_normal_samples};
use crate::rng::stream;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Pilot,
    QmcFill,
    Adaptive,
    AdversarialEdge,
}

impl Provenance {
    pub fn as_str(&self) -> &'static str {
        match self {
            Provenance::Pilot => "pilot",
            Provenance::QmcFill => "qmc_fill",
            Provenance::Adaptive => "adaptive",
            Provenance::AdversarialEdge => "adversarial_edge",
        }
    }
}

/// Training sites for one time step.
#[derive(Clone, Debug, PartialEq)]
pub struct Design {
    pub k: usize,
    pub sites: Vec<AugmentedState>,
    pub provenance: Vec<Provenance>,
}

impl Design {
    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }
}

/// Forward paths used only to locate the reachable region of the state space.
#[derive(Clone, Debug, PartialEq)]
pub struct PilotPaths {
    /// `paths[p][k]` for `k = 0..=K`.
    pub paths: Vec<Vec<AugmentedState>>,
}

impl PilotPaths {
    pub fn at(&self, k: usize) -> impl Iterator<Item = &AugmentedState> + '_ {
        self.paths.iter().map(move |p| &p[k])
    }
}

/// Pilot paths. Portfolio paths start at the initial beliefs and evolve under
/// them. Hedging paths start from randomized prices and beliefs and each
/// evolves under its own initial parameters, with no position in the stock.
pub fn simulate_pilots(spec: &ProblemSpec, sizes: &DesignSizes, seed: u64) -> Result<PilotPaths> {
    let k_max = spec.steps;
    let mut paths = Vec::with_capacity(sizes.n_pilot);
    for p in 0..sizes.n_pilot {
        let mut rng = stream(seed, "pilot", p as u64);
        let (x0, theta) = match spec.kind {
            ProblemKind::Portfolio { .. } => (
                AugmentedState::portfolio(1.0, spec.initial_beliefs(), 0),
                spec.prior,
            ),
            ProblemKind::Hedging { strike, .. } => {
                let m = spec.prior.mu * rng.random_range(0.5..1.5);
                let s = spec.prior.sigma * rng.random_range(0.6..1.3);
                let price = strike * rng.random_range(0.5..2.0);
                (
                    AugmentedState::hedging(price, 0.0, Beliefs::new(m, s, spec.k0), 0),
                    ModelParams::new(m, s),
                )
            }
        };
        let shocks: Vec<f64> = standard_normal_samples(k_max, &mut rng);
        let mut path = Vec::with_capacity(k_max + 1);
        path.push(x0);
        for z in shocks {
            let next = transition(path.last().unwrap(), 0.0, &theta, z, spec)?;
            path.push(next);
        }
        paths.push(path);
    }
    Ok(PilotPaths { paths })
}

fn margin_interior(u: f64, lo: f64, hi: f64) -> bool {
    let eps = 1e-6 * (hi - lo);
    u > lo + eps && u < hi - eps
}

/// Portfolio design in `(mu_bar, sigma_bar)`: Sobol fill of the pilot hull at
/// step `k` plus sites of step `k+1` whose optimal control was interior.
/// Without a previous solution the fill takes the whole budget.
pub fn build_design_portfolio(
    k: usize,
    pilots: &PilotPaths,
    prev: Option<&StepSolution>,
    sizes: &DesignSizes,
    spec: &ProblemSpec,
) -> Result<Design> {
    let n_total = sizes.n_qmc + sizes.n_adaptive;
    let n = spec.n_eff_at(k);
    let mut adaptive: Vec<(f64, f64)> = Vec::new();
    if sizes.n_adaptive > 0 {
        match prev {
            Some(step) => {
                let (lo, hi) = spec.control_domain;
                adaptive = step
                    .sites
                    .iter()
                    .filter(|s| margin_interior(s.control, lo, hi))
                    .map(|s| (s.state.beliefs.mu_bar, s.state.beliefs.sigma_bar))
                    .take(sizes.n_adaptive)
                    .collect();
            }
            None if k + 1 < spec.steps => {
                return Err(Error::invalid(format!(
                    "adaptive design at step {k} needs the step {} solution",
                    k + 1
                )));
            }
            None => {}
        }
    }
    let pts: Vec<[f64; 2]> = pilots
        .at(k)
        .map(|x| [x.beliefs.mu_bar, x.beliefs.sigma_bar])
        .collect();
    let hull = convex_hull(&pts)?;
    let fill = hull.fill(n_total - adaptive.len())?;
    let mut sites = Vec::with_capacity(n_total);
    let mut provenance = Vec::with_capacity(n_total);
    for p in fill {
        sites.push(AugmentedState::portfolio(
            1.0,
            Beliefs::new(p[0], p[1], n),
            k,
        ));
        provenance.push(Provenance::QmcFill);
    }
    for (m, s) in adaptive {
        sites.push(AugmentedState::portfolio(1.0, Beliefs::new(m, s, n), k));
        provenance.push(Provenance::Adaptive);
    }
    Ok(Design {
        k,
        sites,
        provenance,
    })
}

/// Hedging design in `(S, W, mu_bar, sigma_bar)`: retained pilot sites,
/// pilot sites moved onto the boundary of their own uncertainty set, and a
/// Sobol fill of the 3-D `(S, mu_bar, sigma_bar)` pilot hull. Wealth is drawn
/// uniformly around each site's Black-Scholes price.
pub fn build_design_hedging(
    k: usize,
    pilots: &PilotPaths,
    sizes: &DesignSizes,
    spec: &ProblemSpec,
    cfg: &SolverConfig,
) -> Result<Design> {
    let ProblemKind::Hedging { strike, .. } = spec.kind else {
        return Err(Error::invalid("hedging design for a non-hedging problem"));
    };
    let n = spec.n_eff_at(k);
    let kappa = spec.kappa();
    let n_keep = sizes.n_pilot - sizes.n_qmc - sizes.n_edge;
    let states: Vec<&AugmentedState> = pilots.at(k).collect();
    let mut cores: Vec<(f64, Beliefs, Provenance)> = Vec::with_capacity(sizes.n_pilot);
    for x in states.iter().take(n_keep) {
        cores.push((
            x.market.price().unwrap_or(0.0),
            x.beliefs,
            Provenance::Pilot,
        ));
    }
    for j in 0..sizes.n_edge {
        let parent = states[n_keep + j];
        let phi = std::f64::consts::TAU * (j as f64 + 0.5) / sizes.n_edge as f64;
        let set = uncertainty_set(&parent.beliefs, kappa, spec.dt)?;
        let theta = set.point(phi, kappa)?;
        cores.push((
            parent.market.price().unwrap_or(0.0),
            Beliefs::new(theta.mu, theta.sigma, n),
            Provenance::AdversarialEdge,
        ));
    }
    if sizes.n_qmc > 0 {
        let pts: Vec<[f64; 3]> = states
            .iter()
            .map(|x| {
                [
                    x.market.price().unwrap_or(0.0),
                    x.beliefs.mu_bar,
                    x.beliefs.sigma_bar,
                ]
            })
            .collect();
        let hull = convex_hull_3d(&pts)?;
        for p in hull.fill(sizes.n_qmc)? {
            cores.push((p[0], Beliefs::new(p[1], p[2], n), Provenance::QmcFill));
        }
    }
    let mut rng = stream(cfg.seed, "design-wealth", k as u64);
    let (wlo, whi) = cfg.wealth_range;
    let t = spec.time(k);
    let mut sites = Vec::with_capacity(cores.len());
    let mut provenance = Vec::with_capacity(cores.len());
    for (price, beliefs, prov) in cores {
        if !(price > 0.0) || !(beliefs.sigma_bar > 0.0) {
            return Err(Error::Degenerate(format!(
                "hedging design site at step {k} has S = {price}, sigma_bar = {}",
                beliefs.sigma_bar
            )));
        }
        let p_bs = bs_price(t, price, strike, spec.r, beliefs.sigma_bar, spec.horizon())?;
        let wealth = p_bs * rng.random_range(wlo..whi);
        sites.push(AugmentedState::hedging(
            price,
            wealth,
            Beliefs {
                n_eff: n,
                ..beliefs
            },
            k,
        ));
        provenance.push(prov);
    }
    Ok(Design {
        k,
        sites,
        provenance,
    })
}
