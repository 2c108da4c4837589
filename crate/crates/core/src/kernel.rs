//! Monte Carlo estimate of the evolution kernel on an `(x0, y0)` grid.
//!
//! Each weighted path contributes a Gaussian in the terminal log-price and a
//! point mass at its initial log-variance, which is histogrammed.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::black_scholes::norm_pdf;
use crate::engine::PathRecord;
use crate::error::{Error, Result};
use crate::mc::Moments;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    /// Number of `y0` bins.
    pub y_bins: usize,
    /// Half-width of the `y0` range in sample standard deviations of `y0`.
    pub y_sd_range: f64,
    /// Half-width of the `x0` range in per-path log-price standard deviations.
    pub x_sd_range: f64,
    /// Target number of grid points per smallest per-path log-price standard deviation.
    pub x_points_per_sd: f64,
    pub max_x_points: usize,
}

impl Default for KernelSpec {
    fn default() -> Self {
        Self {
            y_bins: 64,
            y_sd_range: 6.0,
            x_sd_range: 10.0,
            x_points_per_sd: 4.0,
            max_x_points: 2001,
        }
    }
}

impl KernelSpec {
    pub fn validate(&self) -> Result<Self> {
        if self.y_bins == 0 {
            return Err(Error::domain("y_bins", "must be at least 1"));
        }
        if !(self.y_sd_range > 0.0 && self.x_sd_range > 0.0 && self.x_points_per_sd > 0.0) {
            return Err(Error::domain("y_sd_range", "ranges and resolution must be > 0"));
        }
        if self.max_x_points < 3 {
            return Err(Error::domain("max_x_points", "must be at least 3"));
        }
        Ok(*self)
    }
}

/// Density table `g(x0, y0)` for current log-price 0 and the model's current log-variance.
///
/// `x0` is the terminal log-price relative to the current one. Rows are indexed
/// by `y0` bin, columns by `x0` node: `density[iy * x0.len() + ix]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelTable {
    pub x0: Vec<f64>,
    pub y0: Vec<f64>,
    pub dx: f64,
    pub dy: f64,
    pub density: Vec<f64>,
    pub stderr: Vec<f64>,
    pub n_paths: usize,
    /// Paths whose `y0` fell outside the binned range; they add no mass.
    pub dropped_paths: usize,
    /// `sum density dx dy` over the table.
    pub integral: f64,
    /// Standard error of the table mass, from the per-path masses.
    pub integral_stderr: f64,
    pub discount: f64,
}

impl KernelTable {
    pub fn at(&self, iy: usize, ix: usize) -> f64 {
        self.density[iy * self.x0.len() + ix]
    }

    /// `x0` marginal, `sum_y density dy`.
    pub fn x_marginal(&self) -> Vec<f64> {
        let nx = self.x0.len();
        (0..nx)
            .map(|ix| (0..self.y0.len()).map(|iy| self.density[iy * nx + ix]).sum::<f64>() * self.dy)
            .collect()
    }

    /// `y0` marginal, `sum_x density dx`.
    pub fn y_marginal(&self) -> Vec<f64> {
        let nx = self.x0.len();
        self.density.chunks(nx).map(|row| row.iter().sum::<f64>() * self.dx).collect()
    }

    /// CSV with columns `x0,y0,density,stderr`, 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "x0,y0,density,stderr")?;
        let nx = self.x0.len();
        for (iy, y) in self.y0.iter().enumerate() {
            for (ix, x) in self.x0.iter().enumerate() {
                let k = iy * nx + ix;
                writeln!(out, "{:.16e},{:.16e},{:.16e},{:.16e}", x, y, self.density[k], self.stderr[k])?;
            }
        }
        Ok(())
    }
}

/// Builds the table from per-path records. `tau` and `rate` fix the log-price
/// Gaussian `N(tau (r~ - s~^2/2), tau s~^2)` and the discount `e^{-r tau}`.
pub(crate) fn build_table(records: &[PathRecord], tau: f64, rate: f64, spec: &KernelSpec) -> Result<KernelTable> {
    let spec = spec.validate()?;
    let n = records.len();
    if n < 2 {
        return Err(Error::domain("n_paths", "a kernel table needs at least 2 paths"));
    }
    let discount = (-rate * tau).exp();

    let mut ys = Moments::default();
    records.iter().for_each(|r| ys.push(r.y_start));
    let y_sd = ys.variance().sqrt();
    // Degenerate spread (e.g. a frozen variance): give the histogram a nominal width.
    let half = (spec.y_sd_range * y_sd).max(1e-12 * (1.0 + ys.mean.abs()));
    let y_lo = ys.mean - half;
    let dy = 2.0 * half / spec.y_bins as f64;
    let y0: Vec<f64> = (0..spec.y_bins).map(|k| y_lo + (k as f64 + 0.5) * dy).collect();

    let means: Vec<f64> = records.iter().map(|r| tau * (r.r_tilde - 0.5 * r.sigma_tilde_sq)).collect();
    let sds: Vec<f64> = records.iter().map(|r| (tau * r.sigma_tilde_sq).sqrt()).collect();
    let sd_min = sds.iter().cloned().fold(f64::INFINITY, f64::min);
    let x_lo = means.iter().zip(&sds).map(|(m, s)| m - spec.x_sd_range * s).fold(f64::INFINITY, f64::min);
    let x_hi = means.iter().zip(&sds).map(|(m, s)| m + spec.x_sd_range * s).fold(f64::NEG_INFINITY, f64::max);
    let wanted = ((x_hi - x_lo) / (sd_min / spec.x_points_per_sd)).ceil() as usize + 1;
    let nx = wanted.clamp(3, spec.max_x_points);
    let dx = (x_hi - x_lo) / (nx - 1) as f64;
    let x0: Vec<f64> = (0..nx).map(|k| x_lo + k as f64 * dx).collect();

    let bins: Vec<Option<usize>> = records
        .iter()
        .map(|r| {
            let k = ((r.y_start - y_lo) / dy).floor();
            if k >= 0.0 && (k as usize) < spec.y_bins {
                Some(k as usize)
            } else {
                None
            }
        })
        .collect();
    let dropped_paths = bins.iter().filter(|b| b.is_none()).count();

    let ny = spec.y_bins;
    let nf = n as f64;
    // One column of cells per x node; each column sums over paths in index order.
    let columns: Vec<(Vec<f64>, Vec<f64>)> = x0
        .par_iter()
        .map(|&x| {
            let mut s = vec![0.0; ny];
            let mut s2 = vec![0.0; ny];
            for (p, r) in records.iter().enumerate() {
                if let Some(iy) = bins[p] {
                    let c = r.weight * discount * norm_pdf((x - means[p]) / sds[p]) / (sds[p] * dy);
                    s[iy] += c;
                    s2[iy] += c * c;
                }
            }
            (s, s2)
        })
        .collect();
    let mut density = vec![0.0; ny * nx];
    let mut stderr = vec![0.0; ny * nx];
    for (ix, (s, s2)) in columns.iter().enumerate() {
        for iy in 0..ny {
            let mean = s[iy] / nf;
            let var = ((s2[iy] / nf - mean * mean) * nf / (nf - 1.0)).max(0.0);
            density[iy * nx + ix] = mean;
            stderr[iy * nx + ix] = (var / nf).sqrt();
        }
    }
    let integral = density.iter().sum::<f64>() * dx * dy;

    let mut mass = Moments::default();
    for (p, r) in records.iter().enumerate() {
        let m = match bins[p] {
            Some(_) => {
                let col: f64 = x0.iter().map(|&x| norm_pdf((x - means[p]) / sds[p])).sum::<f64>() * dx / sds[p];
                r.weight * discount * col
            }
            None => 0.0,
        };
        mass.push(m);
    }

    Ok(KernelTable {
        x0,
        y0,
        dx,
        dy,
        density,
        stderr,
        n_paths: n,
        dropped_paths,
        integral,
        integral_stderr: mass.stderr(),
        discount,
    })
}
