use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

fn check(s: f64, strike: f64, sigma: f64, t: f64, maturity: f64) -> Result<()> {
    if !(s > 0.0)
        || !(strike > 0.0)
        || !(sigma > 0.0)
        || !(t <= maturity)
        || !s.is_finite()
        || !sigma.is_finite()
    {
        return Err(Error::invalid(format!(
            "Black-Scholes needs S > 0, strike > 0, sigma > 0, t <= T (S={s}, K={strike}, sigma={sigma}, t={t}, T={maturity})"
        )));
    }
    Ok(())
}

fn d1_d2(s: f64, strike: f64, r: f64, sigma: f64, tau: f64) -> (f64, f64) {
    let sd = sigma * tau.sqrt();
    let d1 = ((s / strike).ln() + (r + 0.5 * sigma * sigma) * tau) / sd;
    (d1, d1 - sd)
}

fn std_normal() -> Normal {
    Normal::standard()
}

/// Call price at time `t` for maturity `maturity`; the payoff at expiry.
pub fn bs_price(t: f64, s: f64, strike: f64, r: f64, sigma: f64, maturity: f64) -> Result<f64> {
    check(s, strike, sigma, t, maturity)?;
    let tau = maturity - t;
    if tau <= 0.0 {
        return Ok((s - strike).max(0.0));
    }
    let (d1, d2) = d1_d2(s, strike, r, sigma, tau);
    let n = std_normal();
    Ok(s * n.cdf(d1) - strike * (-r * tau).exp() * n.cdf(d2))
}

/// Call delta; the indicator of `S > strike` at expiry.
pub fn bs_delta(t: f64, s: f64, strike: f64, r: f64, sigma: f64, maturity: f64) -> Result<f64> {
    check(s, strike, sigma, t, maturity)?;
    let tau = maturity - t;
    if tau <= 0.0 {
        return Ok(if s > strike { 1.0 } else { 0.0 });
    }
    let (d1, _) = d1_d2(s, strike, r, sigma, tau);
    Ok(std_normal().cdf(d1))
}
