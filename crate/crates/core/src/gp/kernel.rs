use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const DEFAULT_NUGGET: f64 = 1e-5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelFamily {
    Matern52,
    SquaredExponential,
}

/// Product-form anisotropic kernel. `nugget` is η; `η²` is added to the
/// diagonal of the training covariance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct KernelSpec<S = f64> {
    pub family: KernelFamily,
    pub tau2: S,
    pub lengthscales: Vec<S>,
    pub nugget: S,
}

impl<S: Scalar> KernelSpec<S> {
    pub fn new(family: KernelFamily, tau2: S, lengthscales: Vec<S>) -> Result<Self> {
        let spec = KernelSpec {
            family,
            tau2,
            lengthscales,
            nugget: S::lit(DEFAULT_NUGGET),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_nugget(mut self, nugget: S) -> Self {
        self.nugget = nugget;
        self
    }

    pub fn dim(&self) -> usize {
        self.lengthscales.len()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau2 > S::zero()) || !self.tau2.is_finite() {
            return Err(Error::invalid(format!(
                "kernel tau2 must be positive, got {}",
                self.tau2
            )));
        }
        if self.lengthscales.is_empty() {
            return Err(Error::invalid("kernel needs at least one lengthscale"));
        }
        if self
            .lengthscales
            .iter()
            .any(|l| !(*l > S::zero()) || !l.is_finite())
        {
            return Err(Error::invalid(
                "kernel lengthscales must be positive and finite",
            ));
        }
        if !(self.nugget >= S::zero()) || !self.nugget.is_finite() {
            return Err(Error::invalid("kernel nugget must be nonnegative"));
        }
        Ok(())
    }

    /// Per-dimension multipliers applied to coordinates before
    /// [`kernel_from_scaled`].
    pub(crate) fn coordinate_factors(&self) -> Vec<S> {
        let c = match self.family {
            KernelFamily::Matern52 => S::lit(5.0).sqrt(),
            KernelFamily::SquaredExponential => S::one(),
        };
        self.lengthscales.iter().map(|&l| c / l).collect()
    }
}

/// Kernel value for coordinates already multiplied by `coordinate_factors`.
#[inline]
pub(crate) fn kernel_from_scaled<S: Scalar>(family: KernelFamily, tau2: S, a: &[S], b: &[S]) -> S {
    match family {
        KernelFamily::Matern52 => {
            let third = S::one() / S::lit(3.0);
            let mut sum = S::zero();
            let mut poly = S::one();
            for (x, y) in a.iter().zip(b) {
                let r = (*x - *y).abs();
                sum += r;
                poly *= S::one() + r + r * r * third;
            }
            tau2 * poly * (-sum).exp()
        }
        KernelFamily::SquaredExponential => {
            let mut sum = S::zero();
            for (x, y) in a.iter().zip(b) {
                let r = *x - *y;
                sum += r * r;
            }
            tau2 * (-S::lit(0.5) * sum).exp()
        }
    }
}

/// Kernel covariance between two sites in the spec's own coordinates.
pub fn kernel_eval<S: Scalar>(spec: &KernelSpec<S>, x: &[S], x2: &[S]) -> Result<S> {
    let d = spec.dim();
    for p in [x, x2] {
        if p.len() != d {
            return Err(Error::Dimension {
                expected: d,
                got: p.len(),
            });
        }
    }
    let f = spec.coordinate_factors();
    let a: Vec<S> = x.iter().zip(&f).map(|(v, c)| *v * *c).collect();
    let b: Vec<S> = x2.iter().zip(&f).map(|(v, c)| *v * *c).collect();
    Ok(kernel_from_scaled(spec.family, spec.tau2, &a, &b))
}
