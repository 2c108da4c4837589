//! Path-integral pricer for an arbitrary vol-of-vol exponent `alpha`.
//!
//! The diffusion coefficient `xi e^{(alpha-1) y}` of the log-variance depends on
//! the state, which brings a Jacobian `prod e^{-(alpha-1) y}` and two correction
//! terms into the action.

use serde::{Deserialize, Serialize};

use crate::engine::{self, diffusion_scale, drift_coefficient, drift_h, gauss_term, Action, Evaluated, ReferenceMeasure, VariantMode};
use crate::error::Result;
use crate::gauss_path::{tilde_y, VelocityPath};
use crate::kernel::{build_table, KernelSpec, KernelTable};
use crate::mc::PriceEstimate;
use crate::mg_alpha1::PathFunctionals;
use crate::params::{GridSpec, MCSpec, MGParams, MarketParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneralFunctionals {
    pub base: PathFunctionals,
    /// Drift evaluated at each slice midpoint.
    pub h_values: Vec<f64>,
}

/// `h(y) = -(lambda e^{-y} + mu - (xi^2 alpha / 2) e^{2y(alpha-1)})`.
pub fn h(mg: &MGParams, y: f64) -> f64 {
    drift_h(mg.lambda, mg.mu, drift_coefficient(mg, VariantMode::Exact), mg.alpha, y)
}

/// `dh/dy = lambda e^{-y} + xi^2 alpha (alpha-1) e^{2y(alpha-1)}`.
pub fn h_prime(mg: &MGParams, y: f64) -> f64 {
    mg.lambda * (-y).exp() + mg.xi * mg.xi * mg.alpha * (mg.alpha - 1.0) * (2.0 * y * (mg.alpha - 1.0)).exp()
}

pub(crate) struct General;

impl Action for General {
    fn check(&self, mg: &MGParams) -> Result<()> {
        mg.require_nondegenerate_rho()
    }

    fn evaluate(&self, v: &[f64], y: &[f64], mg: &MGParams, rate: f64, mode: VariantMode, dt: f64, index: usize) -> Result<Evaluated> {
        let f = raw(v, y, mg, rate, mode, dt, index, false)?;
        Ok(Evaluated {
            s0: f.base.s0,
            log_jacobian: f.base.log_jacobian,
            sigma_tilde_sq: f.base.sigma_tilde_sq,
            r_tilde: f.base.r_tilde,
        })
    }
}

#[allow(clippy::too_many_arguments)]
fn raw(v: &[f64], y: &[f64], mg: &MGParams, rate: f64, mode: VariantMode, dt: f64, index: usize, keep_h: bool) -> Result<GeneralFunctionals> {
    let MGParams { lambda, mu, xi, alpha, rho, .. } = *mg;
    let c = drift_coefficient(mg, mode);
    let n = v.len() as f64;
    let mut h_values = Vec::with_capacity(if keep_h { v.len() } else { 0 });
    let (mut quad, mut hp_sum, mut lin_sum, mut jac) = (0.0, 0.0, 0.0, 0.0);
    let (mut e1, mut ea, mut eb) = (0.0, 0.0, 0.0);
    for (i, &vi) in v.iter().enumerate() {
        let m = 0.5 * (y[i] + y[i + 1]);
        let g2 = diffusion_scale(alpha, m, index)?;
        let hm = drift_h(lambda, mu, c, alpha, m);
        quad += gauss_term(vi, hm, g2, dt, xi);
        hp_sum += 0.5 * h_prime(mg, m) * dt;
        lin_sum += 0.5 * (alpha - 1.0) * (vi - hm) * dt;
        jac += -(alpha - 1.0) * m;
        e1 += m.exp();
        ea += ((alpha - 0.5) * m).exp();
        eb += (vi - hm) * ((1.5 - alpha) * m).exp();
        if keep_h {
            h_values.push(hm);
        }
    }
    let (e1, ea, eb) = (e1 / n, ea / n, eb / n);
    let (s0, r_tilde) = match mode {
        VariantMode::Exact => (quad + (hp_sum + lin_sum), rate - rho * rho * e1 - rho * xi / 4.0 * ea - rho / xi * eb),
        VariantMode::Symmetrized => (quad, rate - 0.5 * rho * rho * e1 - rho / xi * eb),
    };
    Ok(GeneralFunctionals {
        base: PathFunctionals {
            s0,
            sigma_tilde_sq: (1.0 - rho * rho) * e1,
            r_tilde,
            log_jacobian: jac,
        },
        h_values,
    })
}

/// Functionals of a velocity path whose log-variance ends at `mg.y`.
pub fn functionals_general(path: &VelocityPath, mg: &MGParams, rate: f64, mode: VariantMode) -> Result<GeneralFunctionals> {
    let mg = mg.validate()?;
    mg.require_nondegenerate_rho()?;
    let y = tilde_y(path, mg.y);
    raw(&path.values, &y.values, &mg, rate, mode, path.grid.dt(), 0, true)
}

pub fn price_general(market: &MarketParams, mg: &MGParams, grid: &GridSpec, mc: &MCSpec, mode: VariantMode) -> Result<PriceEstimate> {
    price_general_with(market, mg, grid, mc, mode, ReferenceMeasure::default())
}

pub fn price_general_with(
    market: &MarketParams,
    mg: &MGParams,
    grid: &GridSpec,
    mc: &MCSpec,
    mode: VariantMode,
    reference: ReferenceMeasure,
) -> Result<PriceEstimate> {
    engine::price_with(&General, market, mg, grid, mc, mode, reference)
}

pub fn kernel_estimate_general(
    tau: f64,
    rate: f64,
    mg: &MGParams,
    n_steps: usize,
    mc: &MCSpec,
    mode: VariantMode,
    spec: &KernelSpec,
) -> Result<KernelTable> {
    let grid = GridSpec::new(tau, n_steps)?;
    let records = engine::collect_records(&General, mg, rate, &grid, mc, mode, ReferenceMeasure::default())?;
    build_table(&records, tau, rate, spec)
}
