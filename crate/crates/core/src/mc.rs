//! Random streams and order-independent reductions for the Monte Carlo pricers.
//!
//! Every sampling unit (a path, or an antithetic pair) owns one ChaCha8 stream
//! selected by its index, and partial results are combined in fixed 1024-unit
//! chunks in index order. Estimates are therefore bit-identical for any number
//! of worker threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::MCSpec;

pub const CHUNK: usize = 1024;

/// Standard normal source for one sampling unit.
pub struct Normals {
    rng: ChaCha8Rng,
    sign: f64,
}

impl Normals {
    pub fn new(seed: u64, stream: u64, mirrored: bool) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self {
            rng,
            sign: if mirrored { -1.0 } else { 1.0 },
        }
    }

    /// Normal stream for path `index` under `mc`. With antithetic sampling, paths
    /// `2k` and `2k+1` share stream `k` and the odd one is mirrored.
    pub fn for_path(mc: &MCSpec, index: usize) -> Self {
        if mc.antithetic {
            Self::new(mc.seed, (index / 2) as u64, index % 2 == 1)
        } else {
            Self::new(mc.seed, index as u64, false)
        }
    }

    #[inline]
    #[allow(clippy::should_implement_trait)]
    pub fn next(&mut self) -> f64 {
        let z: f64 = self.rng.sample(StandardNormal);
        self.sign * z
    }
}

/// Mixes a base seed with a label so that different methods in one run draw
/// from unrelated streams.
pub fn derive_seed(seed: u64, tag: &str) -> u64 {
    // FNV-1a of the tag, then one splitmix64 round.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in tag.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    splitmix64(seed ^ h)
}

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Runs `f` inside a dedicated rayon pool. `threads = 0` lets rayon decide.
pub fn with_threads<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> R {
    match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}

pub trait Accumulator: Default + Send {
    type Item;
    fn push(&mut self, item: Self::Item);
    fn merge(&mut self, other: Self);
}

/// Evaluates `f` on units `0..n_units` and folds the results. The fold order is
/// fixed, so the output does not depend on scheduling. On failure the error of
/// the lowest failing unit is returned.
pub fn reduce_units<A, F>(n_units: usize, f: F) -> Result<A>
where
    A: Accumulator,
    F: Fn(usize) -> Result<A::Item> + Sync,
{
    let n_chunks = n_units.div_ceil(CHUNK);
    let parts: Vec<Result<A>> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = A::default();
            for u in c * CHUNK..((c + 1) * CHUNK).min(n_units) {
                acc.push(f(u)?);
            }
            Ok(acc)
        })
        .collect();
    let mut total = A::default();
    for part in parts {
        total.merge(part?);
    }
    Ok(total)
}

/// Streaming mean and variance (Welford, merged with Chan's formula).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    pub n: u64,
    pub mean: f64,
    pub m2: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(&mut self, o: &Moments) {
        if o.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *o;
            return;
        }
        let n = self.n + o.n;
        let d = o.mean - self.mean;
        self.mean += d * o.n as f64 / n as f64;
        self.m2 += o.m2 + d * d * (self.n as f64 * o.n as f64 / n as f64);
        self.n = n;
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            (self.m2 / (self.n - 1) as f64).max(0.0)
        }
    }

    pub fn stderr(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            (self.variance() / self.n as f64).sqrt()
        }
    }
}

impl Accumulator for Moments {
    type Item = f64;
    fn push(&mut self, item: f64) {
        Moments::push(self, item)
    }
    fn merge(&mut self, other: Self) {
        Moments::merge(self, &other)
    }
}

/// Monte Carlo price with diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriceEstimate {
    pub price: f64,
    pub stderr: f64,
    pub n_paths: usize,
    /// Kish effective sample size of the importance weights.
    pub effective_sample_size: f64,
    pub mean_weight: f64,
}

impl PriceEstimate {
    pub fn deterministic(price: f64) -> Self {
        Self {
            price,
            stderr: 0.0,
            n_paths: 0,
            effective_sample_size: 0.0,
            mean_weight: 1.0,
        }
    }

    /// `|a - b| / sqrt(se_a^2 + se_b^2)`; infinite when both are exact and differ.
    pub fn z_score(&self, other: &PriceEstimate) -> f64 {
        let d = (self.price - other.price).abs();
        let s = (self.stderr * self.stderr + other.stderr * other.stderr).sqrt();
        if s > 0.0 {
            d / s
        } else if d == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

/// One sampling unit: the weighted payoff averaged over the unit's paths and
/// the individual importance weights.
pub struct UnitSample {
    pub value: f64,
    pub weights: [f64; 2],
    pub n: usize,
}

#[derive(Default)]
struct PriceAcc {
    values: Moments,
    sum_w: f64,
    sum_w2: f64,
    n_w: u64,
}

impl Accumulator for PriceAcc {
    type Item = UnitSample;
    fn push(&mut self, s: UnitSample) {
        self.values.push(s.value);
        for &w in &s.weights[..s.n] {
            self.sum_w += w;
            self.sum_w2 += w * w;
        }
        self.n_w += s.n as u64;
    }
    fn merge(&mut self, o: Self) {
        self.values.merge(&o.values);
        self.sum_w += o.sum_w;
        self.sum_w2 += o.sum_w2;
        self.n_w += o.n_w;
    }
}

/// Importance-sampled estimator of `E[w * f]`.
///
/// `path(index, normals)` simulates one path and returns `(w, f)`. Antithetic
/// pairs are averaged before the variance is taken, so the standard error
/// accounts for their correlation.
pub fn estimate<F>(mc: &MCSpec, path: F) -> Result<PriceEstimate>
where
    F: Fn(usize, &mut Normals) -> Result<(f64, f64)> + Sync,
{
    let mc = mc.validate()?;
    let per_unit = if mc.antithetic { 2 } else { 1 };
    let n_units = mc.n_paths / per_unit;
    let acc: PriceAcc = reduce_units(n_units, |u| {
        let mut out = UnitSample {
            value: 0.0,
            weights: [0.0; 2],
            n: per_unit,
        };
        for k in 0..per_unit {
            let index = u * per_unit + k;
            let mut normals = Normals::for_path(&mc, index);
            let (w, f) = path(index, &mut normals)?;
            let x = w * f;
            if !x.is_finite() {
                return Err(Error::numerical(index, format!("non-finite weighted payoff (w = {w}, f = {f})")));
            }
            out.value += x;
            out.weights[k] = w;
        }
        out.value /= per_unit as f64;
        Ok(out)
    })?;
    let ess = if acc.sum_w2 > 0.0 {
        acc.sum_w * acc.sum_w / acc.sum_w2
    } else {
        0.0
    };
    Ok(PriceEstimate {
        price: acc.values.mean,
        stderr: acc.values.stderr(),
        n_paths: mc.n_paths,
        effective_sample_size: ess.min(mc.n_paths as f64),
        mean_weight: acc.sum_w / acc.n_w as f64,
    })
}

/// Largest admissible `|log w|` before a path is reported as a blow-up.
pub const MAX_LOG_WEIGHT: f64 = 700.0;

pub(crate) fn checked_weight(index: usize, log_w: f64) -> Result<f64> {
    if !log_w.is_finite() || log_w.abs() > MAX_LOG_WEIGHT {
        return Err(Error::numerical(index, format!("log importance weight {log_w} out of range")));
    }
    Ok(log_w.exp())
}
