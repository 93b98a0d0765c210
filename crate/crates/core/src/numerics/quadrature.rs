use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Knots and weights replacing an expectation over one standard-normal shock
/// with a weighted sum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureRule<S = f64> {
    knots: Vec<S>,
    weights: Vec<S>,
}

fn sum_tol<S: Scalar>() -> S {
    S::lit(1e-12).max(S::epsilon() * S::lit(64.0))
}

impl<S: Scalar> QuadratureRule<S> {
    /// Symmetric rule with increasing knots and nonnegative weights summing to one.
    pub fn new(knots: Vec<S>, weights: Vec<S>) -> Result<Self> {
        let rule = QuadratureRule { knots, weights };
        rule.check_weights()?;
        if rule.knots.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::invalid(
                "quadrature knots must be strictly increasing",
            ));
        }
        let n = rule.knots.len();
        let tol = S::lit(1e-10).max(S::epsilon() * S::lit(64.0));
        for i in 0..n / 2 {
            let j = n - 1 - i;
            if (rule.knots[i] + rule.knots[j]).abs() > tol * (S::one() + rule.knots[j].abs())
                || (rule.weights[i] - rule.weights[j]).abs() > tol
            {
                return Err(Error::invalid("quadrature rule must be symmetric about 0"));
            }
        }
        Ok(rule)
    }

    /// Equal-weight rule over drawn samples. Knots keep the draw order and are
    /// not symmetric; used for Monte Carlo integration.
    pub fn from_samples(samples: Vec<S>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::invalid("need at least one sample"));
        }
        if samples.iter().any(|z| !z.is_finite()) {
            return Err(Error::non_finite("shock sample"));
        }
        let w = S::one() / S::from_usize_lossy(samples.len());
        let weights = vec![w; samples.len()];
        Ok(QuadratureRule {
            knots: samples,
            weights,
        })
    }

    fn check_weights(&self) -> Result<()> {
        if self.knots.is_empty() || self.knots.len() != self.weights.len() {
            return Err(Error::invalid(
                "quadrature rule needs matching non-empty knots and weights",
            ));
        }
        if self.weights.iter().any(|w| !(*w >= S::zero()))
            || self.knots.iter().any(|z| !z.is_finite())
        {
            return Err(Error::invalid(
                "quadrature weights must be nonnegative and knots finite",
            ));
        }
        let total: S = self.weights.iter().copied().sum();
        if (total - S::one()).abs() > sum_tol::<S>() * S::from_usize_lossy(self.weights.len()) {
            return Err(Error::invalid(format!(
                "quadrature weights sum to {total}, not 1"
            )));
        }
        Ok(())
    }

    pub fn knots(&self) -> &[S] {
        &self.knots
    }

    pub fn weights(&self) -> &[S] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.knots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.knots.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (S, S)> + '_ {
        self.knots.iter().copied().zip(self.weights.iter().copied())
    }

    /// Two-column text, one `knot weight` (or `knot,weight`) pair per line;
    /// blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut knots = Vec::new();
        let mut weights = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|s| !s.is_empty())
                .collect();
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|_| Error::invalid(format!("line {}: cannot parse {s:?}", lineno + 1)))
            };
            match cols.as_slice() {
                [k, w] => {
                    let (Ok(k), Ok(w)) = (parse(k), parse(w)) else {
                        // Header rows are tolerated on the first line only.
                        if knots.is_empty() && lineno == 0 {
                            continue;
                        }
                        return Err(Error::invalid(format!(
                            "line {}: expected two numbers",
                            lineno + 1
                        )));
                    };
                    knots.push(S::lit(k));
                    weights.push(S::lit(w));
                }
                _ => {
                    return Err(Error::invalid(format!(
                        "line {}: expected two columns",
                        lineno + 1
                    )))
                }
            }
        }
        QuadratureRule::new(knots, weights)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::invalid(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("knot,weight\n");
        for (k, w) in self.iter() {
            out.push_str(&format!("{:e},{:e}\n", k.as_f64(), w.as_f64()));
        }
        out
    }
}

/// Gauss-Hermite rule with `n` points rescaled to the standard normal:
/// knot `sqrt(2) x_i`, weight `w_i / sqrt(pi)`. Exact for polynomials of
/// degree at most `2n - 1`.
pub fn gaussian_rule<S: Scalar>(n: usize) -> Result<QuadratureRule<S>> {
    if n < 1 {
        return Err(Error::invalid("quadrature needs at least one knot"));
    }
    let (x, w) = gauss_hermite(n)?;
    let sqrt2 = std::f64::consts::SQRT_2;
    let inv_sqrt_pi = 1.0 / std::f64::consts::PI.sqrt();
    // gauss_hermite returns descending roots; emit ascending.
    let knots: Vec<S> = x.iter().rev().map(|&v| S::lit(v * sqrt2)).collect();
    let weights: Vec<S> = w.iter().rev().map(|&v| S::lit(v * inv_sqrt_pi)).collect();
    QuadratureRule::new(knots, weights)
}

/// Physicists' Gauss-Hermite nodes (descending) and weights for the weight
/// function `exp(-x^2)`, by Newton iteration on the orthonormal recurrence.
fn gauss_hermite(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    const PIM4: f64 = 0.751_125_544_464_942_5;
    const EPS: f64 = 1e-14;
    const MAXIT: usize = 100;
    let nf = n as f64;
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    let mut z = 0.0f64;
    for i in 0..m {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.855_75 * (2.0 * nf + 1.0).powf(-0.166_67),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        let mut converged = false;
        for _ in 0..MAXIT {
            let mut p1 = PIM4;
            let mut p2 = 0.0;
            for j in 1..=n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= EPS * z.abs().max(1.0) {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::non_finite(format!(
                "Gauss-Hermite root {i} of {n} did not converge"
            )));
        }
        if n % 2 == 1 && i == m - 1 {
            z = 0.0;
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    Ok((x, w))
}

/// Weighted sum `sum_i f(z_i) w_i`; errors if `f` is not finite at a knot.
/// Terms are added in mirrored pairs so odd integrands cancel exactly.
pub fn expect<S: Scalar, F: FnMut(S) -> S>(rule: &QuadratureRule<S>, mut f: F) -> Result<S> {
    let mut term = |i: usize| -> Result<S> {
        let z = rule.knots[i];
        let v = f(z);
        if !v.is_finite() {
            return Err(Error::non_finite(format!("integrand at knot {z}")));
        }
        Ok(v * rule.weights[i])
    };
    let n = rule.len();
    let mut acc = S::zero();
    for i in 0..n / 2 {
        let lo = term(i)?;
        let hi = term(n - 1 - i)?;
        acc += lo + hi;
    }
    if n % 2 == 1 {
        acc += term(n / 2)?;
    }
    Ok(acc)
}
