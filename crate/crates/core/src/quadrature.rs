//! Gauss-Legendre and Gauss-Hermite rules (Newton iteration on the three-term recurrences).

use std::f64::consts::PI;

/// Nodes and weights of an interpolatory rule.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// `n`-point Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> Rule {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = 1.0;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = ((2.0 * jf + 1.0) * z * p2 - jf * p3) / (jf + 1.0);
            }
            pp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-15 {
                break;
            }
        }
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        weights[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        weights[n - 1 - i] = weights[i];
    }
    Rule { nodes, weights }
}

/// Composite Gauss-Legendre integral of `f` over `[a, b]` with `panels` equal panels.
pub fn integrate_legendre(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize, rule: &Rule) -> f64 {
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let lo = a + h * p as f64;
        let c = lo + 0.5 * h;
        let mut s = 0.0;
        for (x, w) in rule.nodes.iter().zip(&rule.weights) {
            s += w * f(c + 0.5 * h * x);
        }
        total += 0.5 * h * s;
    }
    total
}

/// `n`-point Gauss-Hermite rule for the weight `e^{-x^2}`.
///
/// Weights of the outermost nodes underflow to zero for large `n`; those nodes
/// carry no mass in double precision anyway.
pub fn gauss_hermite(n: usize) -> Rule {
    assert!(n >= 1);
    let nf = n as f64;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    // Roots bracketed by Sturm counts on the Jacobi matrix (zero diagonal,
    // off-diagonal sqrt(k/2)), then polished by Newton on the normalized recurrence.
    let bound = (2.0 * nf + 1.0).sqrt() + 1.0;
    for i in 0..n.div_ceil(2) {
        let target = n - 1 - i;
        let (mut lo, mut hi) = (0.0f64, bound);
        if n % 2 == 1 && i == n / 2 {
            hi = 0.0;
        }
        while hi - lo > 1e-15 * hi.max(1.0) {
            let mid = 0.5 * (lo + hi);
            if count_below(n, mid) <= target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let mut z = 0.5 * (lo + hi);
        let mut pp = hermite_eval(n, z).1;
        for _ in 0..3 {
            let (p1, d) = hermite_eval(n, z);
            pp = d;
            if d != 0.0 {
                z -= p1 / d;
            }
        }
        nodes[n - 1 - i] = z;
        nodes[i] = -z;
        weights[i] = 2.0 / (pp * pp);
        weights[n - 1 - i] = weights[i];
    }
    Rule { nodes, weights }
}

/// Number of Jacobi-matrix eigenvalues below `x`.
fn count_below(n: usize, x: f64) -> usize {
    let mut count = 0;
    let mut q = -x;
    for k in 0..n {
        if k > 0 {
            let e2 = k as f64 / 2.0;
            let prev = if q == 0.0 { f64::EPSILON } else { q };
            q = -x - e2 / prev;
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Orthonormal Hermite polynomial of degree `n` at `z` and its derivative.
fn hermite_eval(n: usize, z: f64) -> (f64, f64) {
    let mut p1 = PI.powf(-0.25);
    let mut p2 = 0.0;
    for j in 1..=n {
        let p3 = p2;
        p2 = p1;
        let jf = j as f64;
        p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
    }
    (p1, (2.0 * n as f64).sqrt() * p2)
}

/// Gauss-Hermite rule for the standard normal density: `sum w_i f(z_i) ~ E[f(Z)]`.
pub fn gauss_hermite_normal(n: usize) -> Rule {
    let r = gauss_hermite(n);
    let s = std::f64::consts::SQRT_2;
    let c = PI.sqrt().recip();
    Rule {
        nodes: r.nodes.iter().map(|x| x * s).collect(),
        weights: r.weights.iter().map(|w| w * c).collect(),
    }
}
