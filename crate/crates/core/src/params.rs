//! Contract, model, grid and Monte Carlo parameters shared by every pricer.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Contract and market state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarketParams {
    pub spot: f64,
    pub strike: f64,
    /// Continuously compounded risk-free rate per year.
    pub rate: f64,
    /// Time to expiry in years.
    pub tau: f64,
}

impl MarketParams {
    pub fn new(spot: f64, strike: f64, rate: f64, tau: f64) -> Self {
        Self {
            spot,
            strike,
            rate,
            tau,
        }
    }

    pub fn validate(&self) -> Result<Self> {
        positive("spot", self.spot)?;
        positive("strike", self.strike)?;
        positive("tau", self.tau)?;
        if !self.rate.is_finite() || self.rate < 0.0 {
            return Err(Error::domain("rate", format!("must be finite and >= 0, got {}", self.rate)));
        }
        Ok(*self)
    }

    pub fn log_spot(&self) -> f64 {
        self.spot.ln()
    }

    pub fn discount(&self) -> f64 {
        (-self.rate * self.tau).exp()
    }
}

/// Stochastic-volatility parameters. The variance is carried in log form, `V = e^y`.
///
/// Variance dynamics: `dV = (lambda + mu V) dt + xi V^alpha dW2`, with `corr(dW1, dW2) = rho`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MGParams {
    pub lambda: f64,
    pub mu: f64,
    pub xi: f64,
    pub alpha: f64,
    pub rho: f64,
    /// Current log-variance.
    pub y: f64,
}

impl MGParams {
    pub fn new(lambda: f64, mu: f64, xi: f64, alpha: f64, rho: f64, y: f64) -> Self {
        Self {
            lambda,
            mu,
            xi,
            alpha,
            rho,
            y,
        }
    }

    /// Builds parameters from the current variance instead of its logarithm.
    pub fn with_variance(lambda: f64, mu: f64, xi: f64, alpha: f64, rho: f64, variance: f64) -> Self {
        Self::new(lambda, mu, xi, alpha, rho, variance.ln())
    }

    pub fn variance(&self) -> f64 {
        self.y.exp()
    }

    pub fn volatility(&self) -> f64 {
        (0.5 * self.y).exp()
    }

    pub fn validate(&self) -> Result<Self> {
        finite("lambda", self.lambda)?;
        finite("mu", self.mu)?;
        finite("alpha", self.alpha)?;
        finite("y", self.y)?;
        positive("xi", self.xi)?;
        if !self.rho.is_finite() || self.rho.abs() > 1.0 {
            return Err(Error::domain("rho", format!("must lie in [-1, 1], got {}", self.rho)));
        }
        Ok(*self)
    }

    /// Path-integral pricers need `1 - rho^2 > 0`: at `|rho| = 1` the conditional
    /// log-price law degenerates to a point mass.
    pub fn require_nondegenerate_rho(&self) -> Result<()> {
        if self.rho.abs() >= 1.0 {
            return Err(Error::domain(
                "rho",
                "path-integral pricers require |rho| < 1 (effective variance vanishes at |rho| = 1)",
            ));
        }
        Ok(())
    }

    pub fn require_alpha_one(&self) -> Result<()> {
        if self.alpha != 1.0 {
            return Err(Error::domain("alpha", format!("this pricer requires alpha = 1, got {}", self.alpha)));
        }
        Ok(())
    }
}

/// Validates both parameter blocks and returns them unchanged.
pub fn validate(market: &MarketParams, mg: &MGParams) -> Result<(MarketParams, MGParams)> {
    Ok((market.validate()?, mg.validate()?))
}

/// Uniform time grid on `[0, tau]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n_steps: usize,
    pub tau: f64,
}

impl GridSpec {
    pub fn new(tau: f64, n_steps: usize) -> Result<Self> {
        if n_steps == 0 {
            return Err(Error::domain("n_steps", "must be at least 1"));
        }
        positive("tau", tau)?;
        Ok(Self { n_steps, tau })
    }

    pub fn dt(&self) -> f64 {
        self.tau / self.n_steps as f64
    }

    /// Left edge of slice `i`.
    pub fn time(&self, i: usize) -> f64 {
        self.tau * i as f64 / self.n_steps as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MCSpec {
    pub n_paths: usize,
    pub seed: u64,
    /// Pair path `2k+1` with the mirror image of path `2k`.
    pub antithetic: bool,
}

impl MCSpec {
    pub fn new(n_paths: usize, seed: u64) -> Self {
        Self {
            n_paths,
            seed,
            antithetic: false,
        }
    }

    pub fn antithetic(mut self, on: bool) -> Self {
        self.antithetic = on;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<Self> {
        if self.n_paths == 0 {
            return Err(Error::domain("n_paths", "must be at least 1"));
        }
        if self.antithetic && !self.n_paths.is_multiple_of(2) {
            return Err(Error::domain("n_paths", "antithetic sampling needs an even path count"));
        }
        Ok(*self)
    }
}

/// Flat JSON run configuration. Every field is optional; missing fields fall back
/// to command-line flags or defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamFile {
    pub spot: Option<f64>,
    pub strike: Option<f64>,
    pub rate: Option<f64>,
    pub tau: Option<f64>,
    pub lambda: Option<f64>,
    pub mu: Option<f64>,
    pub xi: Option<f64>,
    pub alpha: Option<f64>,
    pub rho: Option<f64>,
    pub y: Option<f64>,
    pub n_steps: Option<usize>,
    pub n_paths: Option<usize>,
    pub seed: Option<u64>,
    pub antithetic: Option<bool>,
}

impl ParamFile {
    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    /// Fields set in `other` win.
    pub fn overlay(self, other: &ParamFile) -> ParamFile {
        ParamFile {
            spot: other.spot.or(self.spot),
            strike: other.strike.or(self.strike),
            rate: other.rate.or(self.rate),
            tau: other.tau.or(self.tau),
            lambda: other.lambda.or(self.lambda),
            mu: other.mu.or(self.mu),
            xi: other.xi.or(self.xi),
            alpha: other.alpha.or(self.alpha),
            rho: other.rho.or(self.rho),
            y: other.y.or(self.y),
            n_steps: other.n_steps.or(self.n_steps),
            n_paths: other.n_paths.or(self.n_paths),
            seed: other.seed.or(self.seed),
            antithetic: other.antithetic.or(self.antithetic),
        }
    }
}

fn finite(field: &'static str, x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(field, format!("must be finite, got {x}")))
    }
}

fn positive(field: &'static str, x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(Error::domain(field, format!("must be finite and > 0, got {x}")))
    }
}
