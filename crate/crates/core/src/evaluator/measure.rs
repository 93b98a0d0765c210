use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dynamics::{uncertainty_set, ModelParams, ProblemSpec};
use crate::error::{Error, Result};

/// Law of the true parameters of a forward path, drawn once at `t_0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TestMeasure {
    Fixed {
        theta: ModelParams,
    },
    /// `mu ~ N(mu_mean, mu_sd^2)` with known `sigma`.
    SampledNormal {
        mu_mean: f64,
        mu_sd: f64,
        sigma: f64,
    },
    /// Uniform over the initial uncertainty set of the problem.
    SampledUniformSet,
}

impl TestMeasure {
    pub fn validate(&self) -> Result<()> {
        match *self {
            TestMeasure::Fixed { theta } if !(theta.sigma >= 0.0) || !theta.mu.is_finite() => Err(
                Error::invalid("test measure theta must be finite with sigma >= 0"),
            ),
            TestMeasure::SampledNormal { mu_sd, sigma, .. }
                if !(mu_sd >= 0.0) || !(sigma >= 0.0) =>
            {
                Err(Error::invalid("test measure mu_sd and sigma must be >= 0"))
            }
            _ => Ok(()),
        }
    }

    pub fn draw<R: Rng + ?Sized>(&self, spec: &ProblemSpec, rng: &mut R) -> Result<ModelParams> {
        match *self {
            TestMeasure::Fixed { theta } => Ok(theta),
            TestMeasure::SampledNormal {
                mu_mean,
                mu_sd,
                sigma,
            } => {
                let z: f64 = rng.sample(StandardNormal);
                Ok(ModelParams::new(mu_mean + mu_sd * z, sigma))
            }
            TestMeasure::SampledUniformSet => {
                let set = uncertainty_set(&spec.initial_beliefs(), spec.kappa(), spec.dt)?;
                let phi = std::f64::consts::TAU * rng.random::<f64>();
                let rho = set.kappa * rng.random::<f64>();
                set.point(phi, rho)
            }
        }
    }
}
