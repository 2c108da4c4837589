//! Shared importance-sampling loop for the path-integral pricers.
//!
//! Velocities are drawn in reverse time, `i = n-1 .. 0`, so the law of `v_i`
//! may depend on the already known `y_{i+1}`. The target log-density (the
//! action plus the Jacobian) is evaluated on the finished path and the weight
//! is the ratio of the two densities.

use serde::{Deserialize, Serialize};

use crate::black_scholes::bs_call_effective;
use crate::error::{Error, Result};
use crate::mc::{checked_weight, estimate, Normals, PriceEstimate};
use crate::params::{GridSpec, MCSpec, MGParams, MarketParams};

/// Sampling law of the velocities.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReferenceMeasure {
    /// Per-step normal with mean `h(y_{i+1})` and variance `xi^2 e^{2(alpha-1) y_{i+1}} / dt`.
    #[default]
    Drifted,
    /// State-independent normal with mean `-(mu - xi^2/2)` and variance `xi^2 / dt`.
    Gaussian,
}

impl std::str::FromStr for ReferenceMeasure {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "drifted" => Ok(Self::Drifted),
            "gaussian" => Ok(Self::Gaussian),
            other => Err(format!("unknown reference measure `{other}` (expected drifted|gaussian)")),
        }
    }
}

/// Which of the two actions is being integrated.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VariantMode {
    /// Full action with the correction terms.
    #[default]
    Exact,
    /// Action built from the classical Lagrangian, i.e. the kernel of the
    /// momentum-symmetrized Hamiltonian.
    Symmetrized,
}

impl std::str::FromStr for VariantMode {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "exact" => Ok(Self::Exact),
            "symmetrized" => Ok(Self::Symmetrized),
            other => Err(format!("unknown variant `{other}` (expected exact|symmetrized)")),
        }
    }
}

impl std::fmt::Display for VariantMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Exact => "exact",
            Self::Symmetrized => "symmetrized",
        })
    }
}

/// Bounds on `e^{2(alpha-1) y}` before a path is declared blown up.
pub const MIN_DIFFUSION_SCALE: f64 = 1e-300;
pub const MAX_DIFFUSION_SCALE: f64 = 1e300;

/// `-(lambda e^{-y} + mu - c e^{2y(alpha-1)})`. With `c = xi^2 alpha / 2` this is the
/// drift `h` of the full action, with `c = xi^2 / 2` the classical drift.
#[inline]
pub(crate) fn drift_h(lambda: f64, mu: f64, c: f64, alpha: f64, y: f64) -> f64 {
    -(lambda * (-y).exp() + mu - c * (2.0 * y * (alpha - 1.0)).exp())
}

/// One slice of the Gaussian part of the action.
#[inline]
pub(crate) fn gauss_term(v: f64, h: f64, g2: f64, dt: f64, xi: f64) -> f64 {
    -(v - h) * (v - h) * dt / (2.0 * xi * xi * g2)
}

#[inline]
pub(crate) fn diffusion_scale(alpha: f64, y: f64, index: usize) -> Result<f64> {
    let g2 = (2.0 * y * (alpha - 1.0)).exp();
    if !(MIN_DIFFUSION_SCALE..=MAX_DIFFUSION_SCALE).contains(&g2) {
        return Err(Error::numerical(
            index,
            format!("state-dependent variance scale e^(2(alpha-1)y) = {g2:e} out of range at y = {y}"),
        ));
    }
    Ok(g2)
}

/// Coefficient `c` of the drift used by `mode` (see [`drift_h`]).
pub(crate) fn drift_coefficient(mg: &MGParams, mode: VariantMode) -> f64 {
    match mode {
        VariantMode::Exact => mg.xi * mg.xi * mg.alpha / 2.0,
        VariantMode::Symmetrized => mg.xi * mg.xi / 2.0,
    }
}

/// Per-path output of the action evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Evaluated {
    pub s0: f64,
    pub log_jacobian: f64,
    pub sigma_tilde_sq: f64,
    pub r_tilde: f64,
}

/// A reverse-time sample with the log-density of the reference law, split as the
/// quadratic part and the Jacobian-like part so both can be compared term by term
/// with the target.
pub(crate) struct Sampled {
    pub v: Vec<f64>,
    pub y: Vec<f64>,
    pub log_ref: f64,
    pub log_ref_jacobian: f64,
}

pub(crate) fn sample_reverse(
    mg: &MGParams,
    grid: &GridSpec,
    mode: VariantMode,
    reference: ReferenceMeasure,
    normals: &mut Normals,
    index: usize,
) -> Result<Sampled> {
    let n = grid.n_steps;
    let dt = grid.dt();
    let sqrt_dt = dt.sqrt();
    let mut v = vec![0.0; n];
    let mut y = vec![0.0; n + 1];
    let mut quad = vec![0.0; n];
    let mut jac = vec![0.0; n];
    y[n] = mg.y;
    match reference {
        ReferenceMeasure::Drifted => {
            let c = drift_coefficient(mg, mode);
            for i in (0..n).rev() {
                let a = y[i + 1];
                let g2 = diffusion_scale(mg.alpha, a, index)?;
                let h = drift_h(mg.lambda, mg.mu, c, mg.alpha, a);
                let vi = h + mg.xi * g2.sqrt() / sqrt_dt * normals.next();
                v[i] = vi;
                y[i] = a - vi * dt;
                quad[i] = gauss_term(vi, h, g2, dt, mg.xi);
                jac[i] = -(mg.alpha - 1.0) * a;
            }
        }
        ReferenceMeasure::Gaussian => {
            let h = drift_h(0.0, mg.mu, mg.xi * mg.xi / 2.0, 1.0, 0.0);
            for i in (0..n).rev() {
                let vi = h + mg.xi / sqrt_dt * normals.next();
                v[i] = vi;
                y[i] = y[i + 1] - vi * dt;
                quad[i] = gauss_term(vi, h, 1.0, dt, mg.xi);
            }
        }
    }
    if let Some(bad) = y.iter().find(|x| !x.is_finite()) {
        return Err(Error::numerical(index, format!("log-variance path diverged ({bad})")));
    }
    // Ascending order, the same order the action sums use.
    let log_ref = quad.iter().sum();
    let log_ref_jacobian = jac.iter().sum();
    Ok(Sampled {
        v,
        y,
        log_ref,
        log_ref_jacobian,
    })
}

/// What the pricing loop needs to know about a functional family.
pub(crate) trait Action: Sync {
    fn check(&self, mg: &MGParams) -> Result<()>;
    #[allow(clippy::too_many_arguments)]
    fn evaluate(&self, v: &[f64], y: &[f64], mg: &MGParams, rate: f64, mode: VariantMode, dt: f64, index: usize) -> Result<Evaluated>;
}

/// Weighted path record shared by the pricer and the kernel estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct PathRecord {
    pub weight: f64,
    pub y_start: f64,
    pub sigma_tilde_sq: f64,
    pub r_tilde: f64,
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn simulate_record<A: Action>(
    action: &A,
    mg: &MGParams,
    rate: f64,
    grid: &GridSpec,
    mode: VariantMode,
    reference: ReferenceMeasure,
    normals: &mut Normals,
    index: usize,
) -> Result<PathRecord> {
    let s = sample_reverse(mg, grid, mode, reference, normals, index)?;
    let e = action.evaluate(&s.v, &s.y, mg, rate, mode, grid.dt(), index)?;
    let log_w = (e.s0 - s.log_ref) + (e.log_jacobian - s.log_ref_jacobian);
    let weight = checked_weight(index, log_w)?;
    if !(e.sigma_tilde_sq.is_finite() && e.sigma_tilde_sq > 0.0 && e.r_tilde.is_finite()) {
        return Err(Error::numerical(
            index,
            format!("effective parameters not finite (sigma^2 = {}, r = {})", e.sigma_tilde_sq, e.r_tilde),
        ));
    }
    Ok(PathRecord {
        weight,
        y_start: s.y[0],
        sigma_tilde_sq: e.sigma_tilde_sq,
        r_tilde: e.r_tilde,
    })
}

pub(crate) fn price_with<A: Action>(
    action: &A,
    market: &MarketParams,
    mg: &MGParams,
    grid: &GridSpec,
    mc: &MCSpec,
    mode: VariantMode,
    reference: ReferenceMeasure,
) -> Result<PriceEstimate> {
    let market = market.validate()?;
    let mg = mg.validate()?;
    mg.require_nondegenerate_rho()?;
    action.check(&mg)?;
    let grid = GridSpec::new(market.tau, grid.n_steps)?;
    estimate(mc, |index, normals| {
        let r = simulate_record(action, &mg, market.rate, &grid, mode, reference, normals, index)?;
        let f = bs_call_effective(market.spot, market.strike, market.rate, market.tau, r.r_tilde, r.sigma_tilde_sq);
        Ok((r.weight, f))
    })
}

/// All path records of a run, in path order.
pub(crate) fn collect_records<A: Action>(
    action: &A,
    mg: &MGParams,
    rate: f64,
    grid: &GridSpec,
    mc: &MCSpec,
    mode: VariantMode,
    reference: ReferenceMeasure,
) -> Result<Vec<PathRecord>> {
    use rayon::prelude::*;
    let mg = mg.validate()?;
    mg.require_nondegenerate_rho()?;
    action.check(&mg)?;
    let mc = mc.validate()?;
    let out: Vec<Result<PathRecord>> = (0..mc.n_paths)
        .into_par_iter()
        .with_min_len(crate::mc::CHUNK)
        .map(|index| {
            let mut normals = Normals::for_path(&mc, index);
            simulate_record(action, &mg, rate, grid, mode, reference, &mut normals, index)
        })
        .collect();
    out.into_iter().collect()
}
