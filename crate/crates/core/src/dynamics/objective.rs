use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{pos_part, Scalar};

/// `l(h) = h^+ + lambda h^-`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossFunction<S = f64> {
    pub lambda: S,
}

impl<S: Scalar> LossFunction<S> {
    pub fn new(lambda: S) -> Result<Self> {
        if !(lambda >= S::zero()) {
            return Err(Error::invalid(format!(
                "loss lambda must be >= 0, got {lambda}"
            )));
        }
        Ok(LossFunction { lambda })
    }

    #[inline]
    pub fn eval(&self, h: S) -> S {
        pos_part(h) + self.lambda * pos_part(-h)
    }
}

/// CRRA power utility `y^(1-gamma) / (1-gamma)`.
pub fn crra_utility<S: Scalar>(y: S, gamma: S) -> Result<S> {
    if !(y > S::zero()) {
        return Err(Error::invalid(format!(
            "utility needs positive wealth, got {y}"
        )));
    }
    let e = S::one() - gamma;
    Ok(y.powf(e) / e)
}

/// European call payoff.
#[inline]
pub fn call_payoff<S: Scalar>(s: S, strike: S) -> S {
    pos_part(s - strike)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn utility_examples() {
        assert_abs_diff_eq!(crra_utility(1.0, 4.0).unwrap(), -1.0 / 3.0, epsilon = 1e-15);
        assert!(crra_utility(0.0, 4.0).is_err());
        assert!(crra_utility(-1.0, 4.0).is_err());
        let grid: Vec<f64> = (1..200).map(|i| i as f64 * 0.05).collect();
        for g in [0.5, 2.0, 4.0, 8.0] {
            for w in grid.windows(2) {
                assert!(crra_utility(w[1], g).unwrap() > crra_utility(w[0], g).unwrap());
            }
        }
    }

    #[test]
    fn loss_examples() {
        let l = LossFunction::new(0.75).unwrap();
        assert_eq!(l.eval(0.0), 0.0);
        assert_eq!(l.eval(2.0), 2.0);
        assert_eq!(l.eval(-2.0), 1.5);
        let abs = LossFunction::new(1.0).unwrap();
        for h in [-3.5, -0.1, 0.0, 0.4, 9.0] {
            assert_eq!(abs.eval(h), f64::abs(h));
        }
        assert!(LossFunction::new(-0.1).is_err());
    }

    #[test]
    fn payoff_examples() {
        assert_eq!(call_payoff(100.0, 100.0), 0.0);
        assert_eq!(call_payoff(129.0, 100.0), 29.0);
        assert_eq!(call_payoff(0.0, 100.0), 0.0);
    }

    proptest! {
        #[test]
        fn loss_is_nonnegative_and_homogeneous(lambda in 0.0..2.0f64, h in -50.0..50.0f64, c in 0.01..10.0f64) {
            let l = LossFunction::new(lambda).unwrap();
            prop_assert!(l.eval(h) >= 0.0);
            prop_assert!((l.eval(c * h) - c * l.eval(h)).abs() <= 1e-12 * (1.0 + c * h.abs()));
            if lambda > 0.0 && h != 0.0 {
                prop_assert!(l.eval(h) > 0.0);
            }
        }
    }
}
