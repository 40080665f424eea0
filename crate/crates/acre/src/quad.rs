//! Gauss–Legendre rules and a bisecting adaptive integrator.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use num_complex::Complex64;

#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes and weights on [-1, 1] by Newton iteration on P_n.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre order must be positive");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// ∫_a^b f.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        let mut s = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            s += w * f(c + h * x);
        }
        h * s
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Shared rule of the given order, built once per process.
pub fn rule(n: usize) -> &'static GaussLegendre {
    static SMALL: [OnceLock<GaussLegendre>; 129] = [const { OnceLock::new() }; 129];
    if n < SMALL.len() {
        return SMALL[n].get_or_init(|| GaussLegendre::new(n));
    }
    static RULES: OnceLock<Mutex<HashMap<usize, &'static GaussLegendre>>> = OnceLock::new();
    let map = RULES.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = map.lock().expect("rule cache poisoned");
    guard
        .entry(n)
        .or_insert_with(|| Box::leak(Box::new(GaussLegendre::new(n))))
}

/// Adaptive Gauss–Legendre by bisection: a panel is accepted when its
/// 16-point value agrees with the sum over its two halves.
pub fn adaptive<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let g = rule(16);
    let whole = g.integrate(a, b, f);
    refine(f, g, a, b, whole, abs_tol, rel_tol, 0)
}

#[allow(clippy::too_many_arguments)]
fn refine<F: Fn(f64) -> f64>(
    f: &F,
    g: &GaussLegendre,
    a: f64,
    b: f64,
    whole: f64,
    abs_tol: f64,
    rel_tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let left = g.integrate(a, m, f);
    let right = g.integrate(m, b, f);
    let halves = left + right;
    let err = (halves - whole).abs();
    if err <= abs_tol.max(rel_tol * halves.abs()) || depth >= 40 {
        return halves;
    }
    refine(f, g, a, m, left, 0.5 * abs_tol, rel_tol, depth + 1)
        + refine(f, g, m, b, right, 0.5 * abs_tol, rel_tol, depth + 1)
}

/// Complex-valued counterpart of [`adaptive`].
pub fn adaptive_complex<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Complex64 {
    if a == b {
        return Complex64::new(0.0, 0.0);
    }
    let g = rule(16);
    let whole = integrate_complex(g, a, b, f);
    refine_complex(f, g, a, b, whole, abs_tol, rel_tol, 0)
}

fn integrate_complex<F: Fn(f64) -> Complex64>(g: &GaussLegendre, a: f64, b: f64, f: &F) -> Complex64 {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut s = Complex64::new(0.0, 0.0);
    for (x, w) in g.nodes.iter().zip(&g.weights) {
        s += f(c + h * x) * *w;
    }
    s * h
}

#[allow(clippy::too_many_arguments)]
fn refine_complex<F: Fn(f64) -> Complex64>(
    f: &F,
    g: &GaussLegendre,
    a: f64,
    b: f64,
    whole: Complex64,
    abs_tol: f64,
    rel_tol: f64,
    depth: u32,
) -> Complex64 {
    let m = 0.5 * (a + b);
    let left = integrate_complex(g, a, m, f);
    let right = integrate_complex(g, m, b, f);
    let halves = left + right;
    if (halves - whole).norm() <= abs_tol.max(rel_tol * halves.norm()) || depth >= 40 {
        return halves;
    }
    refine_complex(f, g, a, m, left, 0.5 * abs_tol, rel_tol, depth + 1)
        + refine_complex(f, g, m, b, right, 0.5 * abs_tol, rel_tol, depth + 1)
}

/// Adaptive integration over consecutive breakpoints.
pub fn adaptive_pieces<F: Fn(f64) -> f64>(f: &F, cuts: &[f64], abs_tol: f64, rel_tol: f64) -> f64 {
    let pieces = cuts.len().saturating_sub(1).max(1) as f64;
    cuts.windows(2)
        .map(|w| adaptive(f, w[0], w[1], abs_tol / pieces, rel_tol))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_two() {
        for n in [1, 2, 5, 8, 16, 33, 64] {
            let g = GaussLegendre::new(n);
            let s: f64 = g.weights.iter().sum();
            assert!((s - 2.0).abs() < 1e-13, "n={n} sum={s}");
        }
    }

    #[test]
    fn exact_for_polynomials_up_to_degree_2n_minus_1() {
        let g = GaussLegendre::new(8);
        for k in 0..16 {
            let v = g.integrate(0.0, 1.0, |x| x.powi(k));
            assert!((v - 1.0 / (k as f64 + 1.0)).abs() < 1e-14, "k={k}");
        }
    }

    #[test]
    fn nodes_are_sorted_and_symmetric() {
        let g = rule(24);
        for w in g.nodes.windows(2) {
            assert!(w[0] < w[1]);
        }
        for i in 0..24 {
            assert!((g.nodes[i] + g.nodes[23 - i]).abs() < 1e-15);
        }
    }

    #[test]
    fn adaptive_handles_peaked_integrand() {
        let f = |x: f64| (-(x - 0.3) * (x - 0.3) * 1e4).exp();
        let v = adaptive(&f, -5.0, 5.0, 1e-14, 1e-13);
        let exact = (std::f64::consts::PI / 1e4).sqrt();
        assert!(((v - exact) / exact).abs() < 1e-11);
    }

    #[test]
    fn adaptive_pieces_with_kink() {
        let f = |x: f64| x.abs();
        let v = adaptive_pieces(&f, &[-1.0, 0.0, 2.0], 1e-14, 1e-14);
        assert!((v - 2.5).abs() < 1e-13);
    }
}
