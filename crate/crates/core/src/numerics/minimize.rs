use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Minimum<S = f64> {
    pub x: S,
    pub value: S,
    pub evaluations: usize,
}

const MAX_ITER: usize = 500;

/// Bounded Brent minimization (golden section with parabolic steps).
/// Never evaluates outside `[lo, hi]`.
pub fn minimize_scalar<S: Scalar, F: FnMut(S) -> S>(
    mut f: F,
    lo: S,
    hi: S,
    tol: S,
) -> Result<Minimum<S>> {
    minimize_scalar_try(|x| Ok(f(x)), lo, hi, tol)
}

/// As [`minimize_scalar`] for an objective that can itself fail.
pub fn minimize_scalar_try<S: Scalar, F: FnMut(S) -> Result<S>>(
    mut f: F,
    lo: S,
    hi: S,
    tol: S,
) -> Result<Minimum<S>> {
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::invalid(format!(
            "minimize_scalar needs lo < hi, got [{lo}, {hi}]"
        )));
    }
    if !(tol > S::zero()) {
        return Err(Error::invalid("minimize_scalar tolerance must be positive"));
    }
    let mut evals = 0usize;
    let mut eval = |x: S| -> Result<S> {
        let x = x.max(lo).min(hi);
        evals += 1;
        let v = f(x)?;
        if !v.is_finite() {
            return Err(Error::non_finite(format!("objective at x = {x}")));
        }
        Ok(v)
    };
    let half = S::lit(0.5);
    let two = S::lit(2.0);
    let c = half * (S::lit(3.0) - S::lit(5.0).sqrt());
    let seps = S::epsilon().sqrt();
    let (mut a, mut b) = (lo, hi);
    let mut v = a + c * (b - a);
    let mut w = v;
    let mut xf = v;
    let (mut d, mut e) = (S::zero(), S::zero());
    let mut fx = eval(xf)?;
    let (mut fv, mut fw) = (fx, fx);
    let mut xm = half * (a + b);
    let mut tol1 = seps * xf.abs() + tol / S::lit(3.0);
    let mut tol2 = two * tol1;
    let sign = |t: S| if t < S::zero() { -S::one() } else { S::one() };
    let mut iter = 0;
    while (xf - xm).abs() > tol2 - half * (b - a) && iter < MAX_ITER {
        iter += 1;
        let mut golden = true;
        if e.abs() > tol1 {
            golden = false;
            let mut r = (xf - w) * (fx - fv);
            let mut q = (xf - v) * (fx - fw);
            let mut p = (xf - v) * q - (xf - w) * r;
            q = two * (q - r);
            if q > S::zero() {
                p = -p;
            }
            q = q.abs();
            r = e;
            e = d;
            if p.abs() < (half * q * r).abs() && p > q * (a - xf) && p < q * (b - xf) {
                d = p / q;
                let x = xf + d;
                if (x - a) < tol2 || (b - x) < tol2 {
                    d = tol1 * sign(xm - xf);
                }
            } else {
                golden = true;
            }
        }
        if golden {
            e = if xf >= xm { a - xf } else { b - xf };
            d = c * e;
        }
        let x = xf + sign(d) * d.abs().max(tol1);
        let fu = eval(x)?;
        if fu <= fx {
            if x >= xf {
                a = xf;
            } else {
                b = xf;
            }
            v = w;
            fv = fw;
            w = xf;
            fw = fx;
            xf = x;
            fx = fu;
        } else {
            if x < xf {
                a = x;
            } else {
                b = x;
            }
            if fu <= fw || w == xf {
                v = w;
                fv = fw;
                w = x;
                fw = fu;
            } else if fu <= fv || v == xf || v == w {
                v = x;
                fv = fu;
            }
        }
        xm = half * (a + b);
        tol1 = seps * xf.abs() + tol / S::lit(3.0);
        tol2 = two * tol1;
    }
    Ok(Minimum {
        x: xf.max(lo).min(hi),
        value: fx,
        evaluations: evals,
    })
}

/// Brent minimization followed by a comparison against `f(lo)` and `f(hi)`.
/// Ties keep the interior point.
pub fn minimize_with_endpoints<S: Scalar, F: FnMut(S) -> Result<S>>(
    mut f: F,
    lo: S,
    hi: S,
    tol: S,
) -> Result<Minimum<S>> {
    let mut best = minimize_scalar_try(&mut f, lo, hi, tol)?;
    for end in [lo, hi] {
        let v = f(end)?;
        if !v.is_finite() {
            return Err(Error::non_finite(format!("objective at endpoint {end}")));
        }
        best.evaluations += 1;
        if v < best.value {
            best.x = end;
            best.value = v;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn quadratic_and_cosine() {
        let m = minimize_scalar(|x: f64| (x - 0.3).powi(2), 0.0, 1.0, 1e-6).unwrap();
        assert!((m.x - 0.3).abs() < 1e-6);
        let m = minimize_scalar(|x: f64| x.cos(), 0.0, 2.0 * std::f64::consts::PI, 1e-6).unwrap();
        assert!((m.x - std::f64::consts::PI).abs() < 1e-6);
    }

    #[test]
    fn increasing_function_hits_lower_endpoint() {
        let m = minimize_with_endpoints(|x: f64| Ok(x), 0.0, 1.0, 1e-6).unwrap();
        assert_eq!(m.x, 0.0);
        assert_eq!(m.value, 0.0);
        let m = minimize_with_endpoints(|x: f64| Ok(-x.powi(3)), 0.0, 1.0, 1e-6).unwrap();
        assert_eq!(m.x, 1.0);
    }

    #[test]
    fn bad_inputs() {
        assert!(minimize_scalar(|x: f64| x, 1.0, 1.0, 1e-6).is_err());
        assert!(minimize_scalar(|x: f64| x, 2.0, 1.0, 1e-6).is_err());
        assert!(minimize_scalar(|_: f64| f64::NAN, 0.0, 1.0, 1e-6).is_err());
        assert!(minimize_scalar(|x: f64| x, 0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn single_precision() {
        let m = minimize_scalar(|x: f32| (x - 0.25) * (x - 0.25), 0.0, 1.0, 1e-4).unwrap();
        assert!((m.x - 0.25).abs() < 1e-3);
    }

    proptest! {
        #[test]
        fn stays_in_bounds_and_is_deterministic(
            lo in -5.0f64..5.0, width in 1e-3f64..10.0, c in -10.0f64..10.0, k in 0.1f64..5.0
        ) {
            let hi = lo + width;
            let f = |x: f64| (k * (x - c)).sin() + 0.1 * (x - c).powi(2);
            let mut seen = Vec::new();
            let m1 = minimize_scalar(|x| { seen.push(x); f(x) }, lo, hi, 1e-8).unwrap();
            prop_assert!(seen.iter().all(|&x| x >= lo && x <= hi));
            let m2 = minimize_scalar(f, lo, hi, 1e-8).unwrap();
            prop_assert_eq!(m1.x.to_bits(), m2.x.to_bits());
        }
    }
}
