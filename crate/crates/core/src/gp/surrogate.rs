use std::collections::HashMap;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::cholesky::Cholesky;
use super::kernel::{kernel_from_scaled, KernelFamily, KernelSpec};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Prior mean `m0`, constant over the input space.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", bound = "S: Scalar")]
pub enum PriorMean<S = f64> {
    /// Average of the training outputs.
    OutputMean,
    Constant(S),
}

/// Affine map `(x - lo) / span` applied to inputs before the kernel.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct InputScaling<S = f64> {
    pub lo: Vec<S>,
    pub span: Vec<S>,
}

impl<S: Scalar> InputScaling<S> {
    pub fn identity(d: usize) -> Self {
        InputScaling {
            lo: vec![S::zero(); d],
            span: vec![S::one(); d],
        }
    }

    /// Maps the bounding box of `x` onto the unit cube; flat coordinates keep span 1.
    pub fn unit_box(x: &[Vec<S>]) -> Self {
        let d = x.first().map_or(0, Vec::len);
        let mut lo = vec![S::infinity(); d];
        let mut hi = vec![S::neg_infinity(); d];
        for p in x {
            for j in 0..d {
                lo[j] = lo[j].min(p[j]);
                hi[j] = hi[j].max(p[j]);
            }
        }
        let span = lo
            .iter()
            .zip(&hi)
            .map(|(l, h)| if *h > *l { *h - *l } else { S::one() })
            .collect();
        InputScaling { lo, span }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    #[inline]
    fn apply_into(&self, x: &[S], factors: &[S], out: &mut [S]) {
        for j in 0..x.len() {
            out[j] = (x[j] - self.lo[j]) / self.span[j] * factors[j];
        }
    }
}

/// Self-contained persisted form of a fitted surrogate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct GpDocument<S = f64> {
    pub family: KernelFamily,
    pub tau2: S,
    pub lengthscales: Vec<S>,
    pub nugget: S,
    pub prior_mean: S,
    pub scaling: InputScaling<S>,
    pub inputs: Vec<Vec<S>>,
    pub outputs: Vec<S>,
}

/// Fitted GP with the training factorization cached. Immutable; prediction is
/// safe from any number of threads.
#[derive(Clone, Debug)]
pub struct GpSurrogate<S = f64> {
    kernel: KernelSpec<S>,
    scaling: InputScaling<S>,
    inputs: Vec<Vec<S>>,
    outputs: Vec<S>,
    prior_mean: S,
    factors: Vec<S>,
    scaled: Vec<S>,
    chol: Cholesky<S>,
    alpha: Vec<S>,
}

/// Merges exact duplicate sites by averaging their outputs; keeps first-seen order.
pub(crate) fn merge_duplicates<S: Scalar>(x: &[Vec<S>], v: &[S]) -> (Vec<Vec<S>>, Vec<S>) {
    let mut index: HashMap<Vec<u64>, usize> = HashMap::with_capacity(x.len());
    let mut xs: Vec<Vec<S>> = Vec::with_capacity(x.len());
    let mut sums: Vec<S> = Vec::with_capacity(x.len());
    let mut counts: Vec<usize> = Vec::with_capacity(x.len());
    for (p, &val) in x.iter().zip(v) {
        // +0.0 and -0.0 are the same site.
        let key: Vec<u64> = p.iter().map(|c| (c.as_f64() + 0.0).to_bits()).collect();
        match index.get(&key) {
            Some(&i) => {
                sums[i] += val;
                counts[i] += 1;
            }
            None => {
                index.insert(key, xs.len());
                xs.push(p.clone());
                sums.push(val);
                counts.push(1);
            }
        }
    }
    let vs = sums
        .into_iter()
        .zip(counts)
        .map(|(s, c)| {
            if c == 1 {
                s
            } else {
                s / S::from_usize_lossy(c)
            }
        })
        .collect();
    (xs, vs)
}

pub(crate) fn check_training<S: Scalar>(x: &[Vec<S>], v: &[S]) -> Result<usize> {
    if x.len() != v.len() {
        return Err(Error::Dimension {
            expected: x.len(),
            got: v.len(),
        });
    }
    if x.is_empty() {
        return Err(Error::invalid("GP needs at least one training site"));
    }
    let d = x[0].len();
    if d == 0 {
        return Err(Error::invalid(
            "GP inputs must have at least one coordinate",
        ));
    }
    for p in x {
        if p.len() != d {
            return Err(Error::Dimension {
                expected: d,
                got: p.len(),
            });
        }
        if p.iter().any(|c| !c.is_finite()) {
            return Err(Error::non_finite("GP training input"));
        }
    }
    if v.iter().any(|c| !c.is_finite()) {
        return Err(Error::non_finite("GP training output"));
    }
    Ok(d)
}

pub(crate) fn resolve_prior<S: Scalar>(prior: PriorMean<S>, v: &[S]) -> S {
    match prior {
        PriorMean::Constant(c) => c,
        PriorMean::OutputMean => v.iter().copied().sum::<S>() / S::from_usize_lossy(v.len()),
    }
}

pub(crate) fn scale_inputs<S: Scalar>(
    x: &[Vec<S>],
    scaling: &InputScaling<S>,
    factors: &[S],
) -> Vec<S> {
    let d = factors.len();
    let mut scaled = vec![S::zero(); x.len() * d];
    for (i, p) in x.iter().enumerate() {
        scaling.apply_into(p, factors, &mut scaled[i * d..(i + 1) * d]);
    }
    scaled
}

/// Factorizes `K + nugget^2 I` on pre-scaled inputs.
pub(crate) fn factor_kernel<S: Scalar>(
    family: KernelFamily,
    tau2: S,
    nugget: S,
    scaled: &[S],
    n: usize,
) -> Result<Cholesky<S>> {
    let d = scaled.len() / n;
    let mut k = vec![S::zero(); n * n];
    let jitter = nugget * nugget;
    for i in 0..n {
        let xi = &scaled[i * d..(i + 1) * d];
        for j in 0..i {
            let v = kernel_from_scaled(family, tau2, xi, &scaled[j * d..(j + 1) * d]);
            k[i * n + j] = v;
            k[j * n + i] = v;
        }
        k[i * n + i] = tau2 + jitter;
    }
    Cholesky::factor(&k, n)
}

const MAX_ESCALATED_NUGGET: f64 = 1e-2;

impl<S: Scalar> GpSurrogate<S> {
    /// Builds a surrogate with fixed hyperparameters. Duplicate sites are
    /// merged; on factorization failure the nugget is doubled up to 1e-2.
    pub fn new(
        x: &[Vec<S>],
        v: &[S],
        kernel: KernelSpec<S>,
        prior: PriorMean<S>,
        scaling: Option<InputScaling<S>>,
    ) -> Result<Self> {
        let d = check_training(x, v)?;
        kernel.validate()?;
        if kernel.dim() != d {
            return Err(Error::Dimension {
                expected: kernel.dim(),
                got: d,
            });
        }
        let (xs, vs) = merge_duplicates(x, v);
        let scaling = scaling.unwrap_or_else(|| InputScaling::unit_box(&xs));
        if scaling.dim() != d {
            return Err(Error::Dimension {
                expected: d,
                got: scaling.dim(),
            });
        }
        let prior_mean = resolve_prior(prior, &vs);
        let mut kernel = kernel;
        let mut first_err = None;
        loop {
            match Self::assemble(
                kernel.clone(),
                scaling.clone(),
                xs.clone(),
                vs.clone(),
                prior_mean,
            ) {
                Ok(s) => return Ok(s),
                Err(Error::Factorization(msg)) => {
                    let first = first_err.get_or_insert(msg).clone();
                    let next = if kernel.nugget > S::zero() {
                        kernel.nugget * S::lit(2.0)
                    } else {
                        S::lit(1e-8)
                    };
                    if next > S::lit(MAX_ESCALATED_NUGGET) {
                        return Err(Error::Factorization(format!(
                            "{first}; nugget escalation to {} did not help",
                            kernel.nugget
                        )));
                    }
                    log::debug!(
                        "GP factorization failed, nugget {} -> {}",
                        kernel.nugget,
                        next
                    );
                    kernel.nugget = next;
                }
                Err(e) => return Err(e),
            }
        }
    }

    fn assemble(
        kernel: KernelSpec<S>,
        scaling: InputScaling<S>,
        inputs: Vec<Vec<S>>,
        outputs: Vec<S>,
        prior_mean: S,
    ) -> Result<Self> {
        let n = inputs.len();
        let factors = kernel.coordinate_factors();
        let scaled = scale_inputs(&inputs, &scaling, &factors);
        let chol = factor_kernel(kernel.family, kernel.tau2, kernel.nugget, &scaled, n)?;
        let centered: Vec<S> = outputs.iter().map(|v| *v - prior_mean).collect();
        let alpha = chol.solve(&centered);
        Ok(GpSurrogate {
            kernel,
            scaling,
            inputs,
            outputs,
            prior_mean,
            factors,
            scaled,
            chol,
            alpha,
        })
    }

    pub fn kernel(&self) -> &KernelSpec<S> {
        &self.kernel
    }

    pub fn scaling(&self) -> &InputScaling<S> {
        &self.scaling
    }

    pub fn inputs(&self) -> &[Vec<S>] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[S] {
        &self.outputs
    }

    pub fn prior_mean(&self) -> S {
        self.prior_mean
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.kernel.dim()
    }

    fn check_dim(&self, x: &[S]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(())
    }

    fn scale_point(&self, x: &[S]) -> Vec<S> {
        let mut out = vec![S::zero(); x.len()];
        self.scaling.apply_into(x, &self.factors, &mut out);
        out
    }

    fn cross_cov(&self, xs: &[S]) -> Vec<S> {
        let d = self.dim();
        (0..self.len())
            .map(|i| {
                kernel_from_scaled(
                    self.kernel.family,
                    self.kernel.tau2,
                    xs,
                    &self.scaled[i * d..(i + 1) * d],
                )
            })
            .collect()
    }

    /// Posterior mean `m0 + k(x)^T alpha`.
    pub fn predict_mean(&self, x: &[S]) -> Result<S> {
        self.check_dim(x)?;
        let mut buf = [S::zero(); 8];
        let d = self.dim();
        let owned;
        let xs: &[S] = if d <= buf.len() {
            self.scaling.apply_into(x, &self.factors, &mut buf[..d]);
            &buf[..d]
        } else {
            owned = self.scale_point(x);
            &owned
        };
        let mut acc = S::zero();
        for (i, a) in self.alpha.iter().enumerate() {
            acc += *a
                * kernel_from_scaled(
                    self.kernel.family,
                    self.kernel.tau2,
                    xs,
                    &self.scaled[i * d..(i + 1) * d],
                );
        }
        Ok(self.prior_mean + acc)
    }

    /// Posterior covariance `K(x, x') - k(x)^T (K + eta^2 I)^{-1} k(x')`.
    pub fn predict_cov(&self, x: &[S], x2: &[S]) -> Result<S> {
        self.check_dim(x)?;
        self.check_dim(x2)?;
        let (a, b) = (self.scale_point(x), self.scale_point(x2));
        let mut ka = self.cross_cov(&a);
        let mut kb = self.cross_cov(&b);
        self.chol.forward(&mut ka);
        self.chol.forward(&mut kb);
        let reduction: S = ka.iter().zip(&kb).map(|(p, q)| *p * *q).sum();
        Ok(kernel_from_scaled(self.kernel.family, self.kernel.tau2, &a, &b) - reduction)
    }

    /// Posterior variance, clamped at zero.
    pub fn predict_var(&self, x: &[S]) -> Result<S> {
        Ok(self.predict_cov(x, x)?.max(S::zero()))
    }

    /// `-1/2 c^T alpha - sum log L_ii - N/2 log 2 pi` with `c` the centered outputs.
    pub fn log_marginal_likelihood(&self) -> S {
        let fit: S = self
            .outputs
            .iter()
            .zip(&self.alpha)
            .map(|(v, a)| (*v - self.prior_mean) * *a)
            .sum();
        let n = S::from_usize_lossy(self.len());
        -S::lit(0.5) * fit - self.chol.half_log_det() - S::lit(0.5) * n * (S::TAU()).ln()
    }

    pub fn condition_estimate(&self) -> S {
        self.chol.condition_estimate()
    }

    pub fn to_document(&self) -> GpDocument<S> {
        GpDocument {
            family: self.kernel.family,
            tau2: self.kernel.tau2,
            lengthscales: self.kernel.lengthscales.clone(),
            nugget: self.kernel.nugget,
            prior_mean: self.prior_mean,
            scaling: self.scaling.clone(),
            inputs: self.inputs.clone(),
            outputs: self.outputs.clone(),
        }
    }

    /// Rebuilds the factorization exactly as stored; no nugget escalation.
    pub fn from_document(doc: GpDocument<S>) -> Result<Self> {
        let d = check_training(&doc.inputs, &doc.outputs)?;
        let kernel = KernelSpec {
            family: doc.family,
            tau2: doc.tau2,
            lengthscales: doc.lengthscales,
            nugget: doc.nugget,
        };
        kernel.validate()?;
        if kernel.dim() != d || doc.scaling.dim() != d {
            return Err(Error::Dimension {
                expected: d,
                got: kernel.dim(),
            });
        }
        Self::assemble(kernel, doc.scaling, doc.inputs, doc.outputs, doc.prior_mean)
    }
}

impl<S: Scalar> Serialize for GpSurrogate<S> {
    fn serialize<Ser: Serializer>(
        &self,
        serializer: Ser,
    ) -> std::result::Result<Ser::Ok, Ser::Error> {
        self.to_document().serialize(serializer)
    }
}

impl<'de, S: Scalar> Deserialize<'de> for GpSurrogate<S> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let doc = GpDocument::<S>::deserialize(deserializer)?;
        GpSurrogate::from_document(doc).map_err(D::Error::custom)
    }
}
