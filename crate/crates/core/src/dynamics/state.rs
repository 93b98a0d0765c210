use serde::{Deserialize, Serialize};

use super::{update_beliefs, Beliefs, ModelParams, ProblemKind, ProblemSpec};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Observable market coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Market<S = f64> {
    Portfolio { wealth: S },
    Hedging { price: S, wealth: S },
}

impl<S: Scalar> Market<S> {
    pub fn wealth(&self) -> S {
        match *self {
            Market::Portfolio { wealth } | Market::Hedging { wealth, .. } => wealth,
        }
    }

    pub fn price(&self) -> Option<S> {
        match *self {
            Market::Hedging { price, .. } => Some(price),
            Market::Portfolio { .. } => None,
        }
    }
}

/// Market state plus the current beliefs at time step `k`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AugmentedState<S = f64> {
    pub market: Market<S>,
    pub beliefs: Beliefs<S>,
    pub k: usize,
}

impl<S: Scalar> AugmentedState<S> {
    pub fn portfolio(wealth: S, beliefs: Beliefs<S>, k: usize) -> Self {
        AugmentedState {
            market: Market::Portfolio { wealth },
            beliefs,
            k,
        }
    }

    pub fn hedging(price: S, wealth: S, beliefs: Beliefs<S>, k: usize) -> Self {
        AugmentedState {
            market: Market::Hedging { price, wealth },
            beliefs,
            k,
        }
    }
}

fn check_finite<S: Scalar>(what: &str, vals: &[S]) -> Result<()> {
    if vals.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::non_finite(format!("{what} input")))
    }
}

#[inline]
fn gross_return<S: Scalar>(theta: &ModelParams<S>, z: S, dt: S) -> S {
    (theta.mu * dt + theta.sigma * dt.sqrt() * z).exp()
}

/// Wealth and beliefs one step ahead for the portfolio problem.
pub fn transition_portfolio<S: Scalar>(
    x: &AugmentedState<S>,
    u: S,
    theta: &ModelParams<S>,
    z: S,
    spec: &ProblemSpec<S>,
) -> Result<AugmentedState<S>> {
    let Market::Portfolio { wealth } = x.market else {
        return Err(Error::invalid(
            "portfolio transition on a non-portfolio state",
        ));
    };
    check_finite(
        "portfolio transition",
        &[wealth, u, theta.mu, theta.sigma, z],
    )?;
    if !(wealth > S::zero()) {
        return Err(Error::invalid(format!(
            "portfolio wealth must be > 0, got {wealth}"
        )));
    }
    let rdt = spec.r * spec.dt;
    let growth = S::one() + rdt + u * (gross_return(theta, z, spec.dt) - rdt - S::one());
    Ok(AugmentedState {
        market: Market::Portfolio {
            wealth: wealth * growth,
        },
        beliefs: update_beliefs(&x.beliefs, theta, z, spec.dt),
        k: x.k + 1,
    })
}

/// Price, wealth and beliefs one step ahead for the hedging problem.
pub fn transition_hedging<S: Scalar>(
    x: &AugmentedState<S>,
    u: S,
    theta: &ModelParams<S>,
    z: S,
    spec: &ProblemSpec<S>,
) -> Result<AugmentedState<S>> {
    let Market::Hedging { price, wealth } = x.market else {
        return Err(Error::invalid("hedging transition on a non-hedging state"));
    };
    check_finite(
        "hedging transition",
        &[price, wealth, u, theta.mu, theta.sigma, z],
    )?;
    if !(price > S::zero()) {
        return Err(Error::invalid(format!(
            "stock price must be > 0, got {price}"
        )));
    }
    let g = gross_return(theta, z, spec.dt);
    Ok(AugmentedState {
        market: Market::Hedging {
            price: price * g,
            wealth: wealth + u * price * (g - S::one()),
        },
        beliefs: update_beliefs(&x.beliefs, theta, z, spec.dt),
        k: x.k + 1,
    })
}

/// Dispatches on the problem kind.
pub fn transition<S: Scalar>(
    x: &AugmentedState<S>,
    u: S,
    theta: &ModelParams<S>,
    z: S,
    spec: &ProblemSpec<S>,
) -> Result<AugmentedState<S>> {
    match spec.kind {
        ProblemKind::Portfolio { .. } => transition_portfolio(x, u, theta, z, spec),
        ProblemKind::Hedging { .. } => transition_hedging(x, u, theta, z, spec),
    }
}
