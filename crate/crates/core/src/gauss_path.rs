//! Discretized Gaussian velocity paths: sampling, the backward log-variance
//! reconstruction, and moment checks of the Gaussian measure.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mc::{reduce_units, Accumulator, Moments, Normals};
use crate::params::{GridSpec, MCSpec};

/// Velocities `v_i` of the log-variance on `[t_i, t_{i+1})`.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityPath {
    pub values: Vec<f64>,
    pub grid: GridSpec,
}

impl VelocityPath {
    pub fn new(values: Vec<f64>, grid: GridSpec) -> Result<Self> {
        if values.len() != grid.n_steps {
            return Err(Error::domain(
                "values",
                format!("expected {} velocities, got {}", grid.n_steps, values.len()),
            ));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::domain("values", format!("velocity {i} is not finite")));
        }
        Ok(Self { values, grid })
    }

    pub fn constant(v: f64, grid: GridSpec) -> Self {
        Self {
            values: vec![v; grid.n_steps],
            grid,
        }
    }

    /// `sum v_i dt`, the total log-variance displacement.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.dt()
    }
}

/// Log-variance trajectory rebuilt backward from its value at the end of the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TildeYPath {
    /// `n_steps + 1` values; the last one equals `terminal_y`.
    pub values: Vec<f64>,
    pub terminal_y: f64,
}

impl TildeYPath {
    /// Slice midpoints `(y_i + y_{i+1}) / 2`.
    pub fn midpoints(&self) -> Vec<f64> {
        self.values.windows(2).map(|p| 0.5 * (p[0] + p[1])).collect()
    }

    pub fn start(&self) -> f64 {
        self.values[0]
    }
}

/// `y_n = terminal_y`, `y_i = y_{i+1} - v_i dt`.
pub fn tilde_y(path: &VelocityPath, terminal_y: f64) -> TildeYPath {
    let n = path.values.len();
    let dt = path.grid.dt();
    let mut values = vec![0.0; n + 1];
    values[n] = terminal_y;
    for i in (0..n).rev() {
        values[i] = values[i + 1] - path.values[i] * dt;
    }
    TildeYPath { values, terminal_y }
}

/// Independent Gaussian velocities with per-step mean and variance `variance_scale / dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSampler {
    pub grid: GridSpec,
    pub mean: Vec<f64>,
    pub variance_scale: Vec<f64>,
}

impl ReferenceSampler {
    pub fn new(grid: GridSpec, mean: Vec<f64>, variance_scale: Vec<f64>) -> Result<Self> {
        let n = grid.n_steps;
        if mean.len() != n || variance_scale.len() != n {
            return Err(Error::domain("mean", "mean and variance_scale need one entry per step"));
        }
        if let Some(i) = variance_scale.iter().position(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::domain("variance_scale", format!("entry {i} must be finite and > 0")));
        }
        Ok(Self {
            grid,
            mean,
            variance_scale,
        })
    }

    /// Stationary law: the same mean and scale on every step.
    pub fn uniform(grid: GridSpec, mean: f64, variance_scale: f64) -> Result<Self> {
        Self::new(grid, vec![mean; grid.n_steps], vec![variance_scale; grid.n_steps])
    }

    /// Draws the path from the given normal source.
    pub fn draw(&self, normals: &mut Normals) -> VelocityPath {
        let dt = self.grid.dt();
        let values = self
            .mean
            .iter()
            .zip(&self.variance_scale)
            .map(|(m, s)| m + (s / dt).sqrt() * normals.next())
            .collect();
        VelocityPath {
            values,
            grid: self.grid,
        }
    }

    /// Path `index` of the run described by `mc`.
    pub fn path(&self, mc: &MCSpec, index: usize) -> VelocityPath {
        self.draw(&mut Normals::for_path(mc, index))
    }

    /// Log-density of `path` up to the normalization constant.
    pub fn log_density(&self, path: &VelocityPath) -> f64 {
        let dt = self.grid.dt();
        path.values
            .iter()
            .zip(self.mean.iter().zip(&self.variance_scale))
            .map(|(v, (m, s))| -(v - m) * (v - m) * dt / (2.0 * s))
            .sum()
    }
}

/// Lazily yields the `mc.n_paths` reference paths in index order.
pub fn sample_reference(
    grid: GridSpec,
    mean: Vec<f64>,
    variance_scale: Vec<f64>,
    mc: MCSpec,
) -> Result<impl Iterator<Item = VelocityPath>> {
    let sampler = ReferenceSampler::new(grid, mean, variance_scale)?;
    let mc = mc.validate()?;
    Ok((0..mc.n_paths).map(move |i| sampler.path(&mc, i)))
}

/// Standardized sample moment `E[v^order] (dt / xi^2)^{order/2}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub order: u32,
    pub value: f64,
    pub stderr: f64,
    /// Gaussian prediction: `(order - 1)!!` for even orders, 0 for odd ones.
    pub expected: f64,
    pub n_samples: u64,
}

impl MomentReport {
    pub fn z(&self) -> f64 {
        if self.stderr > 0.0 {
            (self.value - self.expected).abs() / self.stderr
        } else {
            0.0
        }
    }
}

pub fn pairing_count(order: u32) -> f64 {
    if order % 2 == 1 {
        return 0.0;
    }
    (1..order).step_by(2).map(|k| k as f64).product()
}

fn centred_sampler(grid: GridSpec) -> ReferenceSampler {
    // The standardized moments do not depend on xi; use xi = 1.
    ReferenceSampler {
        grid,
        mean: vec![0.0; grid.n_steps],
        variance_scale: vec![1.0; grid.n_steps],
    }
}

/// Per-path averages of `(v_i sqrt(dt))^order` over the steps, then averaged over paths.
pub fn wick_moment_check(grid: GridSpec, mc: MCSpec, order: u32) -> Result<MomentReport> {
    if !(1..=6).contains(&order) {
        return Err(Error::domain("order", format!("supported orders are 1..=6, got {order}")));
    }
    let mc = mc.validate()?;
    let sampler = centred_sampler(grid);
    let scale = grid.dt().sqrt();
    let acc: Moments = reduce_units(mc.n_paths, |i| {
        let p = sampler.path(&mc, i);
        let s: f64 = p.values.iter().map(|v| (v * scale).powi(order as i32)).sum();
        Ok(s / grid.n_steps as f64)
    })?;
    Ok(MomentReport {
        order,
        value: acc.mean,
        stderr: acc.stderr(),
        expected: pairing_count(order),
        n_samples: mc.n_paths as u64 * grid.n_steps as u64,
    })
}

/// Fourth over squared second moment, with a delta-method standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KurtosisReport {
    pub mu2: f64,
    pub mu4: f64,
    pub ratio: f64,
    pub stderr: f64,
}

#[derive(Default)]
struct PairAcc {
    n: u64,
    a: f64,
    b: f64,
    aa: f64,
    bb: f64,
    ab: f64,
}

impl Accumulator for PairAcc {
    type Item = (f64, f64);
    fn push(&mut self, (x, y): (f64, f64)) {
        self.n += 1;
        self.a += x;
        self.b += y;
        self.aa += x * x;
        self.bb += y * y;
        self.ab += x * y;
    }
    fn merge(&mut self, o: Self) {
        self.n += o.n;
        self.a += o.a;
        self.b += o.b;
        self.aa += o.aa;
        self.bb += o.bb;
        self.ab += o.ab;
    }
}

pub fn wick_kurtosis(grid: GridSpec, mc: MCSpec) -> Result<KurtosisReport> {
    let mc = mc.validate()?;
    let sampler = centred_sampler(grid);
    let scale = grid.dt().sqrt();
    let n_steps = grid.n_steps as f64;
    let acc: PairAcc = reduce_units(mc.n_paths, |i| {
        let p = sampler.path(&mc, i);
        let (mut s2, mut s4) = (0.0, 0.0);
        for v in &p.values {
            let u = (v * scale) * (v * scale);
            s2 += u;
            s4 += u * u;
        }
        Ok((s2 / n_steps, s4 / n_steps))
    })?;
    let n = acc.n as f64;
    let (m2, m4) = (acc.a / n, acc.b / n);
    let var2 = (acc.aa / n - m2 * m2) / n;
    let var4 = (acc.bb / n - m4 * m4) / n;
    let cov = (acc.ab / n - m2 * m4) / n;
    let ratio = m4 / (m2 * m2);
    // gradient of m4 / m2^2
    let g2 = -2.0 * m4 / (m2 * m2 * m2);
    let g4 = 1.0 / (m2 * m2);
    let var = g2 * g2 * var2 + g4 * g4 * var4 + 2.0 * g2 * g4 * cov;
    Ok(KurtosisReport {
        mu2: m2,
        mu4: m4,
        ratio,
        stderr: var.max(0.0).sqrt(),
    })
}

/// Standardized `E[v_i v_{i+lag}]` averaged over steps; zero for a white-noise measure.
pub fn cross_moment_check(grid: GridSpec, mc: MCSpec, lag: usize) -> Result<MomentReport> {
    if lag == 0 || lag >= grid.n_steps {
        return Err(Error::domain("lag", "must be in 1..n_steps"));
    }
    let mc = mc.validate()?;
    let sampler = centred_sampler(grid);
    let dt = grid.dt();
    let acc: Moments = reduce_units(mc.n_paths, |i| {
        let p = sampler.path(&mc, i);
        let s: f64 = (0..grid.n_steps - lag).map(|k| p.values[k] * p.values[k + lag] * dt).sum();
        Ok(s / (grid.n_steps - lag) as f64)
    })?;
    Ok(MomentReport {
        order: 2,
        value: acc.mean,
        stderr: acc.stderr(),
        expected: 0.0,
        n_samples: mc.n_paths as u64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid(n: usize) -> GridSpec {
        GridSpec::new(1.0, n).unwrap()
    }

    #[test]
    fn zero_path_keeps_terminal_value() {
        let p = VelocityPath::constant(0.0, grid(5));
        let y = tilde_y(&p, -3.2);
        assert!(y.values.iter().all(|&v| v == -3.2));
    }

    #[test]
    fn one_step_arithmetic() {
        let p = VelocityPath::new(vec![1.0], grid(1)).unwrap();
        let y = tilde_y(&p, 0.0);
        assert_eq!(y.values, vec![-1.0, 0.0]);
    }

    #[test]
    fn rejects_bad_paths() {
        assert!(VelocityPath::new(vec![0.0; 3], grid(4)).is_err());
        assert!(VelocityPath::new(vec![0.0, f64::NAN], grid(2)).is_err());
        assert!(ReferenceSampler::uniform(grid(4), 0.0, 0.0).is_err());
    }

    #[test]
    fn reference_variance_matches_white_noise() {
        let g = grid(16);
        let xi = 0.3;
        let mc = MCSpec::new(8000, 5);
        let paths: Vec<VelocityPath> = sample_reference(g, vec![0.0; 16], vec![xi * xi; 16], mc).unwrap().collect();
        let mut m = Moments::default();
        for p in &paths {
            for v in &p.values {
                m.push(*v);
            }
        }
        assert!(m.mean.abs() < 3.0 * m.stderr());
        let target = xi * xi / g.dt();
        // stderr of a sample variance of normals: var * sqrt(2 / n)
        let se = target * (2.0 / m.n as f64).sqrt();
        assert!((m.variance() - target).abs() < 3.0 * se, "{} vs {}", m.variance(), target);
    }

    #[test]
    fn same_seed_same_first_path() {
        let s = ReferenceSampler::uniform(grid(32), 0.1, 0.04).unwrap();
        let mc = MCSpec::new(10, 99);
        assert_eq!(s.path(&mc, 0), s.path(&mc, 0));
        assert_ne!(s.path(&mc, 0), s.path(&mc, 1));
    }

    #[test]
    fn antithetic_paths_mirror_about_mean() {
        let s = ReferenceSampler::uniform(grid(8), 0.4, 0.09).unwrap();
        let mc = MCSpec::new(2, 3).antithetic(true);
        let a = s.path(&mc, 0);
        let b = s.path(&mc, 1);
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x + y - 0.8).abs() < 1e-12);
        }
    }

    #[test]
    fn wick_orders() {
        let g = grid(64);
        let mc = MCSpec::new(20_000, 17);
        for order in 1..=6 {
            let r = wick_moment_check(g, mc, order).unwrap();
            assert!(r.z() < 4.0, "order {order}: {r:?}");
        }
        assert!(wick_moment_check(g, mc, 8).is_err());
        let c = cross_moment_check(g, mc, 1).unwrap();
        assert!(c.z() < 4.0);
    }

    #[test]
    fn pairing_counts() {
        assert_eq!(pairing_count(2), 1.0);
        assert_eq!(pairing_count(4), 3.0);
        assert_eq!(pairing_count(6), 15.0);
        assert_eq!(pairing_count(3), 0.0);
    }

    proptest! {
        #[test]
        fn backward_accumulation_telescopes(vs in proptest::collection::vec(-5.0f64..5.0, 1..64), y in -5.0f64..1.0) {
            let g = GridSpec::new(0.5, vs.len()).unwrap();
            let p = VelocityPath::new(vs, g).unwrap();
            let t = tilde_y(&p, y);
            prop_assert_eq!(t.values[vs_len(&p)], y);
            prop_assert!((t.start() - (y - p.integral())).abs() < 1e-12);
            for i in 0..p.values.len() {
                prop_assert!((t.values[i] - (t.values[i + 1] - p.values[i] * g.dt())).abs() < 1e-12);
            }
        }
    }

    fn vs_len(p: &VelocityPath) -> usize {
        p.values.len()
    }
}
