//! Black-Scholes closed form, its log-price kernel, and a quadrature pricer built on that kernel.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::MarketParams;
use crate::quadrature::{gauss_legendre, integrate_legendre};

const SQRT_2PI: f64 = 2.506_628_274_631_000_7;

/// Truncation of the quadrature pricer, in kernel standard deviations.
pub const QUAD_TRUNCATION_SD: f64 = 12.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BSResult {
    pub price: f64,
    pub d_plus: f64,
    pub d_minus: f64,
}

/// Standard normal CDF via `erfc`, accurate in both tails.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * std::f64::consts::FRAC_1_SQRT_2)
}

pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / SQRT_2PI
}

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma.is_finite() && sigma > 0.0 {
        Ok(())
    } else {
        Err(Error::domain("sigma", format!("must be finite and > 0, got {sigma}")))
    }
}

pub fn bs_price(market: &MarketParams, sigma: f64) -> Result<BSResult> {
    let m = market.validate()?;
    check_sigma(sigma)?;
    let sd = sigma * m.tau.sqrt();
    let d_plus = ((m.spot / m.strike).ln() + m.tau * (m.rate + 0.5 * sigma * sigma)) / sd;
    let d_minus = d_plus - sd;
    let price = m.spot * norm_cdf(d_plus) - m.strike * m.discount() * norm_cdf(d_minus);
    Ok(BSResult {
        price: price.max(0.0),
        d_plus,
        d_minus,
    })
}

/// Call value with an effective drift rate and an effective variance, discounted at `rate`:
/// `S e^{tau (r_eff - rate)} N(d+) - e^{-rate tau} K N(d-)`, with `d` built from `r_eff` and `var_eff`.
///
/// `var_eff = 0` gives the deterministic limit `e^{-rate tau} (S e^{r_eff tau} - K)^+`.
pub fn bs_call_effective(spot: f64, strike: f64, rate: f64, tau: f64, r_eff: f64, var_eff: f64) -> f64 {
    let growth = (tau * (r_eff - rate)).exp();
    let disc = (-rate * tau).exp();
    if var_eff <= 0.0 {
        return (spot * growth - disc * strike).max(0.0);
    }
    let sd = (var_eff * tau).sqrt();
    let d_plus = ((spot / strike).ln() + tau * (r_eff + 0.5 * var_eff)) / sd;
    let d_minus = d_plus - sd;
    spot * growth * norm_cdf(d_plus) - disc * strike * norm_cdf(d_minus)
}

/// Transition density of the log-price over `tau`, as a function of the displacement
/// `dx = x - x0` between current and terminal log-price, including the discount factor.
pub fn bs_kernel(tau: f64, dx: f64, rate: f64, sigma: f64) -> Result<f64> {
    if !(tau.is_finite() && tau > 0.0) {
        return Err(Error::domain("tau", format!("must be finite and > 0, got {tau}")));
    }
    check_sigma(sigma)?;
    let var = tau * sigma * sigma;
    let u = dx + tau * (rate - 0.5 * sigma * sigma);
    Ok((-rate * tau).exp() * (-0.5 * u * u / var).exp() / (SQRT_2PI * var.sqrt()))
}

const PANELS: usize = 192;
const NODES: usize = 20;

fn kernel_quadrature(market: &MarketParams, sigma: f64, put: bool) -> Result<f64> {
    let m = market.validate()?;
    check_sigma(sigma)?;
    let x = m.log_spot();
    let s = sigma * m.tau.sqrt();
    let mean = x + m.tau * (m.rate - 0.5 * sigma * sigma);
    // The e^{x0} leg is centred s^2 higher than the kernel itself.
    let hi = mean + s * s + QUAD_TRUNCATION_SD * s;
    let lo = mean - QUAD_TRUNCATION_SD * s;
    let log_k = m.strike.ln();
    let (a, b) = if put { (lo, log_k.min(hi)) } else { (log_k.max(lo), hi) };
    if b <= a {
        return Ok(0.0);
    }
    let rule = gauss_legendre(NODES);
    let payoff = |x0: f64| {
        let v = x0.exp() - m.strike;
        if put {
            -v
        } else {
            v
        }
    };
    let f = |x0: f64| payoff(x0).max(0.0) * bs_kernel(m.tau, x - x0, m.rate, sigma).unwrap_or(0.0);
    Ok(integrate_legendre(f, a, b, PANELS, &rule))
}

/// Call price by direct integration of [`bs_kernel`] against the payoff `(e^{x0} - K)^+`.
pub fn bs_price_quadrature(market: &MarketParams, sigma: f64) -> Result<f64> {
    kernel_quadrature(market, sigma, false)
}

/// Put price by the same kernel against `(K - e^{x0})^+`.
pub fn bs_put_quadrature(market: &MarketParams, sigma: f64) -> Result<f64> {
    kernel_quadrature(market, sigma, true)
}
