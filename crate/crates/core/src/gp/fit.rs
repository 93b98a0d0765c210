use rayon::prelude::*;

use super::kernel::{KernelFamily, KernelSpec, DEFAULT_NUGGET};
use super::surrogate::{
    check_training, factor_kernel, merge_duplicates, resolve_prior, scale_inputs, GpSurrogate,
    InputScaling, PriorMean,
};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct FitOptions<S = f64> {
    pub family: KernelFamily,
    /// Starting hyperparameters; defaults derived from the data when absent.
    pub init: Option<KernelSpec<S>>,
    /// Use `init` as-is and skip the likelihood search.
    pub freeze: bool,
    pub prior: PriorMean<S>,
    pub nugget: S,
    pub restarts: usize,
    pub max_evals: usize,
    /// Rescale inputs to the unit cube before fitting.
    pub rescale: bool,
}

impl<S: Scalar> Default for FitOptions<S> {
    fn default() -> Self {
        FitOptions {
            family: KernelFamily::Matern52,
            init: None,
            freeze: false,
            prior: PriorMean::OutputMean,
            nugget: S::lit(DEFAULT_NUGGET),
            restarts: 5,
            max_evals: 250,
            rescale: true,
        }
    }
}

const START_MULTIPLIERS: [(f64, f64); 5] =
    [(1.0, 1.0), (1.0, 0.2), (1.0, 5.0), (0.1, 0.5), (10.0, 2.0)];

/// Fits a surrogate to `(x, v)`. Unless frozen, maximizes the log marginal
/// likelihood over `(tau2, lengthscales)` in log-space with bounded
/// multi-start Nelder-Mead; the nugget stays fixed.
pub fn fit<S: Scalar>(x: &[Vec<S>], v: &[S], opts: &FitOptions<S>) -> Result<GpSurrogate<S>> {
    let d = check_training(x, v)?;
    let (xs, vs) = merge_duplicates(x, v);
    if xs.len() < 2 {
        return Err(Error::invalid("GP fit needs at least 2 distinct sites"));
    }
    let scaling = if opts.rescale {
        InputScaling::unit_box(&xs)
    } else {
        InputScaling::identity(d)
    };
    let prior_mean = resolve_prior(opts.prior, &vs);
    let centered: Vec<S> = vs.iter().map(|y| *y - prior_mean).collect();
    let n = S::from_usize_lossy(centered.len());
    let var = centered.iter().map(|c| *c * *c).sum::<S>() / n;
    let ranges: Vec<S> = if opts.rescale {
        vec![S::one(); d]
    } else {
        InputScaling::unit_box(&xs).span
    };

    let init = match &opts.init {
        Some(k) => {
            if k.dim() != d {
                return Err(Error::Dimension {
                    expected: d,
                    got: k.dim(),
                });
            }
            k.clone().with_nugget(opts.nugget)
        }
        None => {
            let tau2 = if var > S::zero() { var } else { S::one() };
            let ls = ranges.iter().map(|r| *r * S::lit(0.3)).collect();
            KernelSpec::new(opts.family, tau2, ls)?.with_nugget(opts.nugget)
        }
    };
    let flat = var <= S::lit(1e-24) * (S::one() + prior_mean * prior_mean);
    if opts.freeze || flat {
        return GpSurrogate::new(
            &xs,
            &vs,
            init,
            PriorMean::Constant(prior_mean),
            Some(scaling),
        );
    }

    let unit = scale_inputs(&xs, &scaling, &vec![S::one(); d]);
    let lower: Vec<S> = std::iter::once((var * S::lit(1e-6)).ln())
        .chain(ranges.iter().map(|r| (*r * S::lit(1e-3)).ln()))
        .collect();
    let upper: Vec<S> = std::iter::once((var * S::lit(1e6)).ln())
        .chain(ranges.iter().map(|r| (*r * S::lit(1e3)).ln()))
        .collect();
    let clamp = |p: &[S]| -> Vec<S> {
        p.iter()
            .zip(lower.iter().zip(&upper))
            .map(|(v, (lo, hi))| v.max(*lo).min(*hi))
            .collect()
    };
    let family = init.family;
    let nugget = init.nugget;
    let npts = xs.len();
    let neg_lml = |p: &[S]| -> S {
        let p = clamp(p);
        let tau2 = p[0].exp();
        let factors: Vec<S> = match family {
            KernelFamily::Matern52 => p[1..]
                .iter()
                .map(|l| S::lit(5.0).sqrt() / l.exp())
                .collect(),
            KernelFamily::SquaredExponential => p[1..].iter().map(|l| S::one() / l.exp()).collect(),
        };
        let mut scaled = unit.clone();
        for (i, s) in scaled.iter_mut().enumerate() {
            *s *= factors[i % d];
        }
        let Ok(chol) = factor_kernel(family, tau2, nugget, &scaled, npts) else {
            return S::infinity();
        };
        let alpha = chol.solve(&centered);
        let fit: S = centered.iter().zip(&alpha).map(|(c, a)| *c * *a).sum();
        let val = S::lit(0.5) * fit + chol.half_log_det();
        if val.is_finite() {
            val
        } else {
            S::infinity()
        }
    };

    let base: Vec<S> = std::iter::once(init.tau2.ln())
        .chain(init.lengthscales.iter().map(|l| l.ln()))
        .collect();
    let starts: Vec<Vec<S>> = START_MULTIPLIERS
        .iter()
        .take(opts.restarts.max(1))
        .map(|&(mt, ml)| {
            let mut s = base.clone();
            s[0] += S::lit(mt).ln();
            for l in &mut s[1..] {
                *l += S::lit(ml).ln();
            }
            clamp(&s)
        })
        .collect();
    let results: Vec<(Vec<S>, S)> = starts
        .par_iter()
        .map(|s| {
            let (p, f, _) = nelder_mead(&neg_lml, s, S::lit(1.0), opts.max_evals, S::lit(1e-9));
            (clamp(&p), f)
        })
        .collect();
    let mut best = 0;
    for (i, r) in results.iter().enumerate() {
        if r.1 < results[best].1 {
            best = i;
        }
    }
    let spec = if results[best].1.is_finite() {
        let p = &results[best].0;
        KernelSpec {
            family,
            tau2: p[0].exp(),
            lengthscales: p[1..].iter().map(|l| l.exp()).collect(),
            nugget,
        }
    } else {
        log::warn!(
            "GP likelihood search found no factorizable point; keeping initial hyperparameters"
        );
        init
    };
    GpSurrogate::new(
        &xs,
        &vs,
        spec,
        PriorMean::Constant(prior_mean),
        Some(scaling),
    )
}

/// Derivative-free Nelder-Mead minimization. Returns `(argmin, min, evaluations)`.
/// Non-finite objective values are treated as `+inf`.
pub fn nelder_mead<S: Scalar, F: Fn(&[S]) -> S>(
    f: &F,
    x0: &[S],
    step: S,
    max_evals: usize,
    ftol: S,
) -> (Vec<S>, S, usize) {
    let dim = x0.len();
    let eval = |x: &[S]| {
        let v = f(x);
        if v.is_nan() {
            S::infinity()
        } else {
            v
        }
    };
    let mut evals = 0usize;
    let mut simplex: Vec<(Vec<S>, S)> = Vec::with_capacity(dim + 1);
    simplex.push((x0.to_vec(), eval(x0)));
    evals += 1;
    for i in 0..dim {
        let mut x = x0.to_vec();
        x[i] += step;
        let fx = eval(&x);
        evals += 1;
        simplex.push((x, fx));
    }
    let half = S::lit(0.5);
    let two = S::lit(2.0);
    loop {
        simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));
        let (fbest, fworst) = (simplex[0].1, simplex[dim].1);
        let spread = (fworst - fbest).abs();
        let converged = fbest.is_finite()
            && fworst.is_finite()
            && spread
                <= ftol * (fbest.abs() + fworst.abs())
                    + S::lit(1e-300).max(S::min_positive_value());
        if converged || evals >= max_evals {
            break;
        }
        let mut c = vec![S::zero(); dim];
        for (x, _) in &simplex[..dim] {
            for j in 0..dim {
                c[j] += x[j];
            }
        }
        for cj in &mut c {
            *cj /= S::from_usize_lossy(dim);
        }
        let worst = simplex[dim].0.clone();
        let along = |t: S| -> Vec<S> { (0..dim).map(|j| c[j] + t * (c[j] - worst[j])).collect() };
        let xr = along(S::one());
        let fr = eval(&xr);
        evals += 1;
        if fr < fbest {
            let xe = along(two);
            let fe = eval(&xe);
            evals += 1;
            simplex[dim] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[dim - 1].1 {
            simplex[dim] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < fworst {
            let xc = along(half);
            let fc = eval(&xc);
            (xc, fc)
        } else {
            let xc = along(-half);
            let fc = eval(&xc);
            (xc, fc)
        };
        evals += 1;
        if fc < fr.min(fworst) {
            simplex[dim] = (xc, fc);
            continue;
        }
        let x_best = simplex[0].0.clone();
        for (x, fx) in simplex.iter_mut().skip(1) {
            for j in 0..dim {
                x[j] = x_best[j] + half * (x[j] - x_best[j]);
            }
            *fx = eval(x);
            evals += 1;
        }
    }
    simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));
    let (x, fx) = simplex.swap_remove(0);
    (x, fx, evals)
}
