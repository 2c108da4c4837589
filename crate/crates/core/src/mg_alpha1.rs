//! Path-integral pricer for the log-normal volatility case `alpha = 1`.
//!
//! Time integrals over the log-variance path are evaluated at slice midpoints.
//! The backward-built path makes this the rule under which the kernel reproduces
//! the risk-neutral dynamics (see `docs/conventions.md`).

use serde::{Deserialize, Serialize};

use crate::engine::{self, drift_h, gauss_term, Action, Evaluated, ReferenceMeasure, VariantMode};
use crate::error::{Error, Result};
use crate::gauss_path::{tilde_y, TildeYPath, VelocityPath};
use crate::kernel::{build_table, KernelSpec, KernelTable};
use crate::mc::PriceEstimate;
use crate::params::{GridSpec, MCSpec, MGParams, MarketParams};

/// Per-path quantities entering the Black-Scholes-shaped integrand.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathFunctionals {
    /// Log-weight of the path.
    pub s0: f64,
    pub sigma_tilde_sq: f64,
    pub r_tilde: f64,
    pub log_jacobian: f64,
}

pub(crate) struct Alpha1;

fn require(mg: &MGParams) -> Result<()> {
    mg.require_alpha_one()?;
    mg.require_nondegenerate_rho()
}

impl Action for Alpha1 {
    fn check(&self, mg: &MGParams) -> Result<()> {
        require(mg)
    }

    fn evaluate(&self, v: &[f64], y: &[f64], mg: &MGParams, rate: f64, mode: VariantMode, dt: f64, _index: usize) -> Result<Evaluated> {
        let f = raw(v, y, mg, rate, mode, dt);
        Ok(Evaluated {
            s0: f.s0,
            log_jacobian: f.log_jacobian,
            sigma_tilde_sq: f.sigma_tilde_sq,
            r_tilde: f.r_tilde,
        })
    }
}

fn raw(v: &[f64], y: &[f64], mg: &MGParams, rate: f64, mode: VariantMode, dt: f64) -> PathFunctionals {
    let MGParams { lambda, mu, xi, rho, .. } = *mg;
    let c = xi * xi / 2.0;
    let n = v.len() as f64;
    let (mut quad, mut corr) = (0.0, 0.0);
    let (mut e1, mut eh, mut ehv, mut emh) = (0.0, 0.0, 0.0, 0.0);
    for (i, &vi) in v.iter().enumerate() {
        let m = 0.5 * (y[i] + y[i + 1]);
        let h = drift_h(lambda, mu, c, 1.0, m);
        quad += gauss_term(vi, h, 1.0, dt, xi);
        corr += 0.5 * (lambda * (-m).exp()) * dt;
        let half = (0.5 * m).exp();
        e1 += m.exp();
        eh += half;
        ehv += half * vi;
        emh += 1.0 / half;
    }
    let (e1, eh, ehv, emh) = (e1 / n, eh / n, ehv / n, emh / n);
    let (s0, c3) = match mode {
        VariantMode::Exact => (quad + corr, xi / 4.0),
        VariantMode::Symmetrized => (quad, xi / 2.0),
    };
    let r_tilde = rate - 0.5 * rho * rho * e1 + rho * (c3 - mu / xi) * eh - rho / xi * ehv - lambda * rho / xi * emh;
    PathFunctionals {
        s0,
        sigma_tilde_sq: (1.0 - rho * rho) * e1,
        r_tilde,
        log_jacobian: 0.0,
    }
}

/// Functionals of a velocity path whose log-variance ends at `mg.y`.
pub fn functionals_alpha1(path: &VelocityPath, mg: &MGParams, rate: f64, mode: VariantMode) -> Result<PathFunctionals> {
    require(mg)?;
    let y = tilde_y(path, mg.y);
    Ok(raw(&path.values, &y.values, mg, rate, mode, path.grid.dt()))
}

/// Same functionals written in the log-variance path itself: velocities become
/// finite differences and the correlation term `int e^{y/2} dy` is integrated in
/// closed form. Defined for `lambda = 0`.
pub fn config_space_functionals(y_path: &TildeYPath, grid: GridSpec, mg: &MGParams, rate: f64) -> Result<PathFunctionals> {
    require(mg)?;
    if mg.lambda != 0.0 {
        return Err(Error::domain("lambda", "the configuration-space form is defined for lambda = 0"));
    }
    if y_path.values.len() != grid.n_steps + 1 {
        return Err(Error::domain("y_path", "needs n_steps + 1 points"));
    }
    let MGParams { mu, xi, rho, .. } = *mg;
    let dt = grid.dt();
    let c = xi * xi / 2.0;
    let y = &y_path.values;
    let n = grid.n_steps as f64;
    let (mut quad, mut e1, mut eh) = (0.0, 0.0, 0.0);
    for i in 0..grid.n_steps {
        let m = 0.5 * (y[i] + y[i + 1]);
        let ydot = (y[i + 1] - y[i]) / dt;
        quad += gauss_term(ydot, drift_h(0.0, mu, c, 1.0, m), 1.0, dt, xi);
        e1 += m.exp();
        eh += (0.5 * m).exp();
    }
    let (e1, eh) = (e1 / n, eh / n);
    let boundary = 2.0 * rho / xi / grid.tau * ((0.5 * y[grid.n_steps]).exp() - (0.5 * y[0]).exp());
    Ok(PathFunctionals {
        s0: quad,
        sigma_tilde_sq: (1.0 - rho * rho) * e1,
        r_tilde: rate - 0.5 * rho * rho * e1 + rho * (xi / 4.0 - mu / xi) * eh - boundary,
        log_jacobian: 0.0,
    })
}

/// `r~` from the velocity form minus `r~` from the configuration form, on the same path.
pub fn representation_gap(path: &VelocityPath, mg: &MGParams, rate: f64) -> Result<f64> {
    let vel = functionals_alpha1(path, mg, rate, VariantMode::Exact)?;
    let cfg = config_space_functionals(&tilde_y(path, mg.y), path.grid, mg, rate)?;
    Ok(vel.r_tilde - cfg.r_tilde)
}

pub fn price_alpha1(market: &MarketParams, mg: &MGParams, grid: &GridSpec, mc: &MCSpec, mode: VariantMode) -> Result<PriceEstimate> {
    price_alpha1_with(market, mg, grid, mc, mode, ReferenceMeasure::default())
}

pub fn price_alpha1_with(
    market: &MarketParams,
    mg: &MGParams,
    grid: &GridSpec,
    mc: &MCSpec,
    mode: VariantMode,
    reference: ReferenceMeasure,
) -> Result<PriceEstimate> {
    engine::price_with(&Alpha1, market, mg, grid, mc, mode, reference)
}

/// Kernel table for horizon `tau` and rate `rate`, current log-variance `mg.y`.
pub fn kernel_estimate_alpha1(
    tau: f64,
    rate: f64,
    mg: &MGParams,
    n_steps: usize,
    mc: &MCSpec,
    mode: VariantMode,
    spec: &KernelSpec,
) -> Result<KernelTable> {
    let grid = GridSpec::new(tau, n_steps)?;
    let records = engine::collect_records(&Alpha1, mg, rate, &grid, mc, mode, ReferenceMeasure::default())?;
    build_table(&records, tau, rate, spec)
}
