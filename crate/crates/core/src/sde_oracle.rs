//! Euler simulation of the stochastic-volatility SDEs, used as an independent oracle.
//!
//! `d ln S = (drift - V/2) dt + sqrt(V) dW1`, `dV = (lambda + mu V) dt + xi V^alpha dW2`,
//! `corr(dW1, dW2) = rho`. Log-Euler for the price, full truncation for the variance.

use serde::{Deserialize, Serialize};

use crate::black_scholes::bs_call_effective;
use crate::error::{Error, Result};
use crate::mc::{reduce_units, Accumulator, Moments, Normals, PriceEstimate};
use crate::params::{GridSpec, MCSpec, MGParams, MarketParams};

/// Drift of the log-price.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Drift {
    /// Pricing drift `r`.
    #[default]
    RiskNeutral,
    /// A real-world drift `phi`.
    Physical(f64),
}

impl std::str::FromStr for Drift {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s == "rn" {
            return Ok(Self::RiskNeutral);
        }
        if let Some(phi) = s.strip_prefix("phys:") {
            return phi
                .parse::<f64>()
                .ok()
                .filter(|p| p.is_finite())
                .map(Self::Physical)
                .ok_or_else(|| format!("bad physical drift `{phi}`"));
        }
        Err(format!("unknown drift `{s}` (expected rn or phys:<phi>)"))
    }
}

impl Drift {
    fn rate(self, market: &MarketParams) -> f64 {
        match self {
            Self::RiskNeutral => market.rate,
            Self::Physical(phi) => phi,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SDEPath {
    pub s_values: Vec<f64>,
    /// Truncated variances `max(V, 0)`.
    pub v_values: Vec<f64>,
    /// Steps at which the untruncated variance was negative.
    pub truncations: usize,
}

fn diffusion(vp: f64, alpha: f64) -> f64 {
    if vp > 0.0 {
        vp.powf(alpha)
    } else if alpha == 0.0 {
        1.0
    } else {
        0.0
    }
}

fn simulate_one(market: &MarketParams, mg: &MGParams, grid: &GridSpec, drift: f64, normals: &mut Normals, keep: bool) -> (SDEPath, f64, f64) {
    let n = grid.n_steps;
    let dt = grid.dt();
    let sdt = dt.sqrt();
    let rho_c = (1.0 - mg.rho * mg.rho).max(0.0).sqrt();
    let mut ln_s = market.log_spot();
    let mut v = mg.variance();
    let mut s_values = Vec::with_capacity(if keep { n + 1 } else { 0 });
    let mut v_values = Vec::with_capacity(if keep { n + 1 } else { 0 });
    let mut truncations = 0;
    let mut integrated = 0.0;
    for _ in 0..n {
        let vp = v.max(0.0);
        if v < 0.0 {
            truncations += 1;
        }
        if keep {
            s_values.push(ln_s.exp());
            v_values.push(vp);
        }
        integrated += vp * dt;
        let z1 = normals.next();
        let z2 = mg.rho * z1 + rho_c * normals.next();
        ln_s += (drift - 0.5 * vp) * dt + (vp * dt).sqrt() * z1;
        v += (mg.lambda + mg.mu * vp) * dt + mg.xi * diffusion(vp, mg.alpha) * sdt * z2;
    }
    if keep {
        s_values.push(ln_s.exp());
        v_values.push(v.max(0.0));
    }
    (
        SDEPath {
            s_values,
            v_values,
            truncations,
        },
        ln_s,
        integrated,
    )
}

fn validated(market: &MarketParams, mg: &MGParams, grid: &GridSpec, mc: &MCSpec) -> Result<(MarketParams, MGParams, GridSpec, MCSpec)> {
    let market = market.validate()?;
    let mg = mg.validate()?;
    let grid = GridSpec::new(market.tau, grid.n_steps)?;
    Ok((market, mg, grid, mc.validate()?))
}

/// Lazily simulated paths in index order.
pub fn simulate(
    mg: &MGParams,
    market: &MarketParams,
    grid: &GridSpec,
    mc: &MCSpec,
    drift: Drift,
) -> Result<impl Iterator<Item = SDEPath>> {
    let (market, mg, grid, mc) = validated(market, mg, grid, mc)?;
    let d = drift.rate(&market);
    Ok((0..mc.n_paths).map(move |i| simulate_one(&market, &mg, &grid, d, &mut Normals::for_path(&mc, i), true).0))
}

/// Price estimate plus the share of variance steps that needed truncation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleEstimate {
    pub estimate: PriceEstimate,
    pub truncation_frequency: f64,
}

#[derive(Default)]
struct Acc {
    values: Moments,
    truncations: u64,
}

impl Accumulator for Acc {
    type Item = (f64, usize);
    fn push(&mut self, (x, t): (f64, usize)) {
        self.values.push(x);
        self.truncations += t as u64;
    }
    fn merge(&mut self, o: Self) {
        self.values.merge(&o.values);
        self.truncations += o.truncations;
    }
}

fn run<F>(market: &MarketParams, mg: &MGParams, grid: &GridSpec, mc: &MCSpec, drift: Drift, payoff: F) -> Result<OracleEstimate>
where
    F: Fn(&MarketParams, f64, f64) -> f64 + Sync,
{
    let (market, mg, grid, mc) = validated(market, mg, grid, mc)?;
    let d = drift.rate(&market);
    let per_unit = if mc.antithetic { 2 } else { 1 };
    let acc: Acc = reduce_units(mc.n_paths / per_unit, |u| {
        let mut x = 0.0;
        let mut t = 0;
        for k in 0..per_unit {
            let index = u * per_unit + k;
            let (path, ln_s, integrated) = simulate_one(&market, &mg, &grid, d, &mut Normals::for_path(&mc, index), false);
            let value = payoff(&market, ln_s, integrated);
            if !value.is_finite() {
                return Err(Error::numerical(index, "non-finite payoff"));
            }
            x += value;
            t += path.truncations;
        }
        Ok((x / per_unit as f64, t))
    })?;
    Ok(OracleEstimate {
        estimate: PriceEstimate {
            price: acc.values.mean,
            stderr: acc.values.stderr(),
            n_paths: mc.n_paths,
            effective_sample_size: mc.n_paths as f64,
            mean_weight: 1.0,
        },
        truncation_frequency: acc.truncations as f64 / (mc.n_paths as f64 * grid.n_steps as f64),
    })
}

/// `e^{-r tau} E[(S_T - K)^+]` under the given drift.
pub fn price_oracle_with(market: &MarketParams, mg: &MGParams, grid: &GridSpec, mc: &MCSpec, drift: Drift) -> Result<OracleEstimate> {
    run(market, mg, grid, mc, drift, |m, ln_s, _| m.discount() * (ln_s.exp() - m.strike).max(0.0))
}

/// Risk-neutral oracle price.
pub fn price_oracle(market: &MarketParams, mg: &MGParams, grid: &GridSpec, mc: &MCSpec) -> Result<PriceEstimate> {
    Ok(price_oracle_with(market, mg, grid, mc, Drift::RiskNeutral)?.estimate)
}

/// `e^{-r tau} E[S_T]`; equals the spot under the risk-neutral drift.
pub fn discounted_spot_mean(market: &MarketParams, mg: &MGParams, grid: &GridSpec, mc: &MCSpec) -> Result<PriceEstimate> {
    Ok(run(market, mg, grid, mc, Drift::RiskNeutral, |m, ln_s, _| m.discount() * ln_s.exp())?.estimate)
}

/// Uncorrelated case: average of Black-Scholes prices at the path-averaged variance
/// `(1/tau) sum V_i^+ dt`.
pub fn hull_white_mixing_price(market: &MarketParams, mg: &MGParams, grid: &GridSpec, mc: &MCSpec) -> Result<PriceEstimate> {
    if mg.rho != 0.0 {
        return Err(Error::domain("rho", "the mixing estimator needs rho = 0"));
    }
    Ok(run(market, mg, grid, mc, Drift::RiskNeutral, |m, _, integrated| {
        bs_call_effective(m.spot, m.strike, m.rate, m.tau, m.rate, integrated / m.tau)
    })?
    .estimate)
}
