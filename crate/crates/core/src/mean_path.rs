//! Mean-path (zero-order) approximation at `alpha = 1`.
//!
//! Inside the Black-Scholes-shaped integrand every plain time average of a
//! function of the log-variance path is replaced by the same function of the
//! path mean `y_m = y - v2`. Terms that are exact differentials, `int v e^{-y}`
//! and `int v e^{y/2}`, are integrated exactly and depend on `v1` only. The
//! path integral then collapses to an expectation over the Gaussian pair
//! `(v1, v2)`, computed here by tensor Gauss-Hermite quadrature.

use serde::{Deserialize, Serialize};

use crate::black_scholes::{bs_call_effective, norm_cdf};
use crate::error::{Error, Result};
use crate::mc::{estimate, PriceEstimate};
use crate::params::{GridSpec, MCSpec, MGParams, MarketParams};
use crate::quadrature::gauss_hermite_normal;

/// The two path functionals the approximation depends on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanPathInputs {
    /// `int_0^tau v dt`.
    pub v1: f64,
    /// `(1/tau) int_0^tau t v dt`.
    pub v2: f64,
}

impl MeanPathInputs {
    /// Discretized functionals of a velocity path (slice midpoints for `t`).
    pub fn from_velocities(v: &[f64], grid: &GridSpec) -> Self {
        let dt = grid.dt();
        let mut v1 = 0.0;
        let mut v2 = 0.0;
        for (i, vi) in v.iter().enumerate() {
            v1 += vi * dt;
            v2 += (i as f64 + 0.5) * dt * vi * dt;
        }
        Self { v1, v2: v2 / grid.tau }
    }
}

/// How the effective-volatility quantity `(1 - rho^2) e^{y_m}` is read.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SigmaStarReading {
    /// It is the effective variance (the default, selected by the Monte Carlo oracle).
    #[default]
    Variance,
    /// It is the effective volatility; the variance is its square.
    Volatility,
}

impl std::str::FromStr for SigmaStarReading {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "variance" => Ok(Self::Variance),
            "volatility" => Ok(Self::Volatility),
            other => Err(format!("unknown sigma-star reading `{other}` (expected variance|volatility)")),
        }
    }
}

impl SigmaStarReading {
    fn variance(self, rho: f64, y_m: f64) -> f64 {
        let s = (1.0 - rho * rho) * y_m.exp();
        match self {
            Self::Variance => s,
            Self::Volatility => s * s,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadSpec {
    /// Nodes per axis at the first level; at least 32.
    pub min_nodes: usize,
    /// Largest node count per axis.
    pub max_nodes: usize,
    /// Relative change under doubling that counts as converged.
    pub rel_tol: f64,
    /// Relative change at `max_nodes` above which the result is rejected.
    pub fail_tol: f64,
}

impl Default for QuadSpec {
    fn default() -> Self {
        Self {
            min_nodes: 32,
            max_nodes: 512,
            rel_tol: 1e-6,
            fail_tol: 1e-4,
        }
    }
}

impl QuadSpec {
    pub fn with_min_nodes(mut self, n: usize) -> Self {
        self.min_nodes = n;
        self.max_nodes = self.max_nodes.max(n);
        self
    }

    pub fn validate(&self) -> Result<Self> {
        if self.min_nodes < 32 {
            return Err(Error::domain("nodes", format!("need at least 32 nodes per axis, got {}", self.min_nodes)));
        }
        if self.max_nodes < self.min_nodes {
            return Err(Error::domain("nodes", "max_nodes must be >= min_nodes"));
        }
        Ok(*self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanPathPrice {
    pub price: f64,
    /// Nodes per axis of the accepted level.
    pub nodes: usize,
    /// Relative change from the previous level.
    pub rel_change: f64,
}

fn check(market: &MarketParams, mg: &MGParams) -> Result<(MarketParams, MGParams)> {
    let market = market.validate()?;
    let mg = mg.validate()?;
    mg.require_alpha_one()?;
    mg.require_nondegenerate_rho()?;
    Ok((market, mg))
}

/// `mu - xi^2/2`, the negative mean velocity of the Gaussian measure.
fn drift_offset(mg: &MGParams) -> f64 {
    mg.mu - mg.xi * mg.xi / 2.0
}

/// Log of the `lambda`-dependent part of the weight.
fn lambda_log_weight(market: &MarketParams, mg: &MGParams, inp: &MeanPathInputs) -> f64 {
    let MGParams { lambda, xi, y, .. } = *mg;
    if lambda == 0.0 {
        return 0.0;
    }
    let tau = market.tau;
    let q = (inp.v2 - y).exp(); // e^{-y_m}
    let xi2 = xi * xi;
    lambda / xi2 * (-y).exp() * (1.0 - inp.v1.exp()) - lambda * tau / xi2 * drift_offset(mg) * q - lambda * lambda * tau / (2.0 * xi2) * q * q
        + lambda * tau / 2.0 * q
}

/// Effective rate of the approximation.
fn r_star(market: &MarketParams, mg: &MGParams, inp: &MeanPathInputs) -> f64 {
    let MGParams { lambda, mu, xi, rho, y, .. } = *mg;
    let y_m = y - inp.v2;
    market.rate - 0.5 * rho * rho * y_m.exp() + rho * (xi / 4.0 - mu / xi) * (0.5 * y_m).exp()
        - 2.0 * rho / (xi * market.tau) * ((0.5 * y).exp() - (0.5 * (y - inp.v1)).exp())
        - lambda * rho / xi * (-0.5 * y_m).exp()
}

fn log_ncdf(d: f64) -> f64 {
    if d > -30.0 {
        norm_cdf(d).ln()
    } else {
        // Asymptotic series for the far left tail.
        let d2 = d * d;
        -0.5 * d2 - (-d).ln() - 0.5 * (2.0 * std::f64::consts::PI).ln() + (1.0 - 1.0 / d2 + 3.0 / (d2 * d2)).ln()
    }
}

/// Weighted integrand at one `(v1, v2)`, combined with the log of a quadrature weight.
fn integrand(market: &MarketParams, mg: &MGParams, inp: &MeanPathInputs, reading: SigmaStarReading, log_node_weight: f64) -> Result<f64> {
    let lw = log_node_weight + lambda_log_weight(market, mg, inp);
    if lw == f64::NEG_INFINITY {
        return Ok(0.0);
    }
    let var = reading.variance(mg.rho, mg.y - inp.v2);
    let rs = r_star(market, mg, inp);
    let (s, k, r, tau) = (market.spot, market.strike, market.rate, market.tau);
    let value = if var > 0.0 && var.is_finite() {
        let sd = (var * tau).sqrt();
        let d_plus = ((s / k).ln() + tau * (rs + 0.5 * var)) / sd;
        let d_minus = d_plus - sd;
        let a = lw + s.ln() + tau * (rs - r) + log_ncdf(d_plus);
        let b = lw + k.ln() - r * tau + log_ncdf(d_minus);
        nan_to_zero(a.exp()) - nan_to_zero(b.exp())
    } else {
        lw.exp() * bs_call_effective(s, k, r, tau, rs, 0.0)
    };
    if !value.is_finite() {
        return Err(Error::numerical(0, format!("mean-path integrand not finite at v1 = {}, v2 = {}", inp.v1, inp.v2)));
    }
    Ok(value)
}

fn nan_to_zero(x: f64) -> f64 {
    if x.is_nan() {
        0.0
    } else {
        x
    }
}

/// Maps a standard normal pair to `(v1, v2)` under the Gaussian velocity measure.
///
/// `v1 ~ N(a tau, xi^2 tau)`, `v2 ~ N(a tau/2, xi^2 tau/3)`, covariance `xi^2 tau/2`,
/// with `a = -(mu - xi^2/2)`.
pub fn inputs_from_normals(mg: &MGParams, tau: f64, z1: f64, z2: f64) -> MeanPathInputs {
    let a = -drift_offset(mg);
    let s = mg.xi * tau.sqrt();
    MeanPathInputs {
        v1: a * tau + s * z1,
        v2: 0.5 * a * tau + s * (0.5 * z1 + z2 / (2.0 * 3f64.sqrt())),
    }
}

fn tensor_price(market: &MarketParams, mg: &MGParams, reading: SigmaStarReading, nodes: usize) -> Result<f64> {
    let rule = gauss_hermite_normal(nodes);
    let logw: Vec<f64> = rule.weights.iter().map(|w| w.ln()).collect();
    let mut total = 0.0;
    for (z1, lw1) in rule.nodes.iter().zip(&logw) {
        if *lw1 == f64::NEG_INFINITY {
            continue;
        }
        let mut row = 0.0;
        for (z2, lw2) in rule.nodes.iter().zip(&logw) {
            if *lw2 == f64::NEG_INFINITY {
                continue;
            }
            let inp = inputs_from_normals(mg, market.tau, *z1, *z2);
            row += integrand(market, mg, &inp, reading, lw1 + lw2)?;
        }
        total += row;
    }
    Ok(total)
}

/// Mean-path price with node doubling until the relative change drops below `quad.rel_tol`.
pub fn price_mean_path(market: &MarketParams, mg: &MGParams, quad: &QuadSpec, reading: SigmaStarReading) -> Result<MeanPathPrice> {
    let (market, mg) = check(market, mg)?;
    let quad = quad.validate()?;
    let mut nodes = quad.min_nodes;
    let mut prev = tensor_price(&market, &mg, reading, nodes)?;
    loop {
        let next_nodes = (2 * nodes).min(quad.max_nodes);
        if next_nodes == nodes {
            // min_nodes == max_nodes: nothing to compare against
            return Ok(MeanPathPrice {
                price: prev,
                nodes,
                rel_change: f64::NAN,
            });
        }
        let next = tensor_price(&market, &mg, reading, next_nodes)?;
        let rel = relative_change(prev, next);
        nodes = next_nodes;
        if rel < quad.rel_tol {
            return Ok(MeanPathPrice {
                price: next,
                nodes,
                rel_change: rel,
            });
        }
        if nodes >= quad.max_nodes {
            if rel > quad.fail_tol {
                return Err(Error::Convergence { nodes, rel_change: rel });
            }
            return Ok(MeanPathPrice {
                price: next,
                nodes,
                rel_change: rel,
            });
        }
        prev = next;
    }
}

fn relative_change(a: f64, b: f64) -> f64 {
    let scale = b.abs().max(a.abs()).max(1e-300);
    (b - a).abs() / scale
}

/// Integrates the `(v1, v2)` density `(2 sqrt3 / (xi^2 tau)) / (2 pi) exp(-(2u1^2 + 6u2^2 - 6u1u2)/(xi^2 tau))`
/// (`u` centred) over the plane with the quadrature used by the pricer. A correct
/// quadratic form and prefactor give 1.
pub fn gaussian_normalization(mg: &MGParams, tau: f64, nodes: usize) -> f64 {
    let rule = gauss_hermite_normal(nodes);
    let xi2t = mg.xi * mg.xi * tau;
    let centre = inputs_from_normals(mg, tau, 0.0, 0.0);
    let jac = xi2t / (2.0 * 3f64.sqrt());
    let pref = 2.0 * 3f64.sqrt() / xi2t / (2.0 * std::f64::consts::PI);
    let mut total = 0.0;
    for (z1, w1) in rule.nodes.iter().zip(&rule.weights) {
        for (z2, w2) in rule.nodes.iter().zip(&rule.weights) {
            if *w1 == 0.0 || *w2 == 0.0 {
                continue;
            }
            let p = inputs_from_normals(mg, tau, *z1, *z2);
            let (u1, u2) = (p.v1 - centre.v1, p.v2 - centre.v2);
            let form = 2.0 * u1 * u1 + 6.0 * u2 * u2 - 6.0 * u1 * u2;
            let density = pref * (-form / xi2t).exp();
            // undo the normal weight of the rule
            let normal = (-(z1 * z1 + z2 * z2) / 2.0).exp() / (2.0 * std::f64::consts::PI);
            total += w1 * w2 * density * jac / normal;
        }
    }
    total
}

/// Brute-force check of the approximation: simulates velocity paths from the
/// Gaussian measure, forms `y_m` and the exact-differential terms on each path,
/// and averages the substituted integrand.
pub fn mean_path_oracle(market: &MarketParams, mg: &MGParams, grid: &GridSpec, mc: &MCSpec, reading: SigmaStarReading) -> Result<PriceEstimate> {
    let (market, mg) = check(market, mg)?;
    let grid = GridSpec::new(market.tau, grid.n_steps)?;
    let n = grid.n_steps;
    let dt = grid.dt();
    let mean_v = -drift_offset(&mg);
    let step_sd = mg.xi / dt.sqrt();
    let MGParams { lambda, mu, xi, rho, y, .. } = mg;
    let tau = market.tau;
    estimate(mc, |index, normals| {
        let v: Vec<f64> = (0..n).map(|_| mean_v + step_sd * normals.next()).collect();
        let mut yt = vec![0.0; n + 1];
        yt[n] = y;
        for i in (0..n).rev() {
            yt[i] = yt[i + 1] - v[i] * dt;
        }
        let (mut y_m, mut ve, mut vh) = (0.0, 0.0, 0.0);
        for i in 0..n {
            let m = 0.5 * (yt[i] + yt[i + 1]);
            y_m += m;
            ve += v[i] * (-m).exp() * dt;
            vh += v[i] * (0.5 * m).exp() * dt;
        }
        let y_m = y_m / n as f64;
        let q = (-y_m).exp();
        let xi2 = xi * xi;
        let log_w = -lambda / xi2 * ve - lambda * tau / xi2 * drift_offset(&mg) * q - lambda * lambda * tau / (2.0 * xi2) * q * q
            + lambda * tau / 2.0 * q;
        let w = crate::mc::checked_weight(index, log_w)?;
        let r_eff = market.rate - 0.5 * rho * rho * y_m.exp() + rho * (xi / 4.0 - mu / xi) * (0.5 * y_m).exp() - rho / xi * vh / tau
            - lambda * rho / xi * (-0.5 * y_m).exp();
        let var = reading.variance(rho, y_m);
        Ok((w, bs_call_effective(market.spot, market.strike, market.rate, tau, r_eff, var)))
    })
}

/// Result of confronting both readings of the effective volatility with the oracle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReadingSelection {
    pub selected: SigmaStarReading,
    pub z_variance: f64,
    pub z_volatility: f64,
}

/// Picks the reading whose quadrature price lies closer, in oracle standard errors,
/// to the oracle price. The oracle itself uses the variance reading of
/// `(1 - rho^2) e^{y_m}`, which is how the path functional defines it.
pub fn select_sigma_reading(market: &MarketParams, mg: &MGParams, grid: &GridSpec, mc: &MCSpec, quad: &QuadSpec) -> Result<ReadingSelection> {
    let oracle = mean_path_oracle(market, mg, grid, mc, SigmaStarReading::Variance)?;
    let pv = price_mean_path(market, mg, quad, SigmaStarReading::Variance)?;
    let pw = price_mean_path(market, mg, quad, SigmaStarReading::Volatility)?;
    let z = |p: f64| (p - oracle.price).abs() / oracle.stderr.max(f64::MIN_POSITIVE);
    let (zv, zw) = (z(pv.price), z(pw.price));
    Ok(ReadingSelection {
        selected: if zv <= zw { SigmaStarReading::Variance } else { SigmaStarReading::Volatility },
        z_variance: zv,
        z_volatility: zw,
    })
}
