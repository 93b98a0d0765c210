use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// `count` i.i.d. standard-normal draws.
pub fn standard_normal_samples<S: Scalar, R: Rng + ?Sized>(count: usize, rng: &mut R) -> Vec<S> {
    (0..count)
        .map(|_| S::lit(rng.sample::<f64, _>(StandardNormal)))
        .collect()
}

/// Plain Monte Carlo estimate `(1/I) sum f(Z_i)` with `Z_i` drawn from `rng`.
pub fn mc_expect<S: Scalar, R: Rng + ?Sized, F: FnMut(S) -> S>(
    mut f: F,
    count: usize,
    rng: &mut R,
) -> Result<S> {
    if count < 1 {
        return Err(Error::invalid("Monte Carlo needs at least one sample"));
    }
    let mut acc = S::zero();
    for _ in 0..count {
        let z = S::lit(rng.sample::<f64, _>(StandardNormal));
        let v = f(z);
        if !v.is_finite() {
            return Err(Error::non_finite(format!("Monte Carlo sample at z = {z}")));
        }
        acc += v;
    }
    Ok(acc / S::from_usize_lossy(count))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn constant_is_exact() {
        let mut rng = stream(1, "mc", 0);
        assert_eq!(mc_expect(|_| 2.5f64, 37, &mut rng).unwrap(), 2.5);
    }

    #[test]
    fn clt_bound_and_determinism() {
        let n = 1_000_000;
        let a = mc_expect(|z: f64| z, n, &mut stream(7, "mc", 0)).unwrap();
        let b = mc_expect(|z: f64| z, n, &mut stream(7, "mc", 0)).unwrap();
        assert!(a.abs() < 4.0 / (n as f64).sqrt());
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn seeds_differ_and_errors() {
        let a = mc_expect(|z: f64| z.exp(), 50, &mut stream(1, "mc", 0)).unwrap();
        let b = mc_expect(|z: f64| z.exp(), 50, &mut stream(2, "mc", 0)).unwrap();
        assert_ne!(a, b);
        assert!(mc_expect(|z: f64| z, 0, &mut stream(1, "mc", 0)).is_err());
        assert!(mc_expect(|_: f64| f64::NAN, 3, &mut stream(1, "mc", 0)).is_err());
    }
}
