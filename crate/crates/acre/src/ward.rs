//! Ward-equation residuals of the limiting 1-point functions.
//!
//! The Cauchy transform C(z) = R(z)⁻¹ ∫ |K(z,w)|²/(z−w) dA(w) of a strip
//! profile depends on Re z only. Writing |K(z,w)|² as a Fourier transform in
//! Im(z − w), the integral over Im w has the closed form
//!
//! ∫ e^{iκD}/(d + iD) dD = π sign(d) e^{−|d||κ|},
//!
//! which leaves
//!
//! C(x) = A(x)⁻¹ ∫ e^{−(x−s)²} m(s) sign(x−s) B(x+s, |x−s|) ds,
//! B(σ, a) = ∫∫ ψ_σ(ξ) ψ_σ(η) e^{−a|ξ−η|} dξ dη,
//!
//! with ψ_σ(ξ) = e^{−(σ−ξ)²/2} ψ(ξ), A(x) = ∫ ψ_{2x} and m = e^{I(2s)} on the
//! support. The cutoff L bounds |x − s|, where the Gaussian factor decays.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::limits::LimitProfile;
use crate::quad::rule;

const ORDER: usize = 16;
const WINDOW_PANEL: f64 = 0.25;
const OUTER_PANEL: f64 = 0.5;
const NEGLIGIBLE: f64 = 60.0;
const MIN_DENSITY: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WardOptions {
    /// Finite-difference step h.
    pub step: f64,
    /// Cutoff L on |Re(z − w)|.
    pub cutoff: f64,
    /// Keep the confinement indicator terms in the right-hand side.
    pub include_indicator: bool,
}

impl Default for WardOptions {
    fn default() -> Self {
        Self { step: 0.02, cutoff: 8.0, include_indicator: true }
    }
}

/// ψ_σ on a window: Gaussian-windowed strip weight, or ξe^{σξ} on [0, 1].
#[derive(Debug, Clone, Copy)]
enum Base {
    Strip,
    HardGinibre,
}

/// Fixed quadrature nodes on the ξ window with ln ψ cached.
struct WindowGrid {
    base: Base,
    edges: Vec<f64>,
    /// (ξ, weight, ln ψ) per panel.
    nodes: Vec<Vec<(f64, f64, f64)>>,
    /// Nodes on [panel start, ξ] for every outer node.
    partial: Vec<Vec<Vec<(f64, f64, f64)>>>,
}

impl WindowGrid {
    fn new(base: Base, lo: f64, hi: f64, ln_psi: &dyn Fn(f64) -> f64) -> Self {
        let panels = ((hi - lo) / WINDOW_PANEL).ceil().max(1.0) as usize;
        let edges: Vec<f64> = (0..=panels).map(|k| lo + (hi - lo) * k as f64 / panels as f64).collect();
        let g = rule(ORDER);
        let place = |a: f64, b: f64| -> Vec<(f64, f64, f64)> {
            let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
            g.nodes.iter().zip(&g.weights).map(|(t, w)| (c + h * t, w * h, ln_psi(c + h * t))).collect()
        };
        let nodes: Vec<Vec<(f64, f64, f64)>> = edges.windows(2).map(|e| place(e[0], e[1])).collect();
        let partial = nodes
            .iter()
            .zip(edges.windows(2))
            .map(|(ns, e)| ns.iter().map(|&(xi, _, _)| place(e[0], xi)).collect())
            .collect();
        Self { base, edges, nodes, partial }
    }

    fn ln_psi_sigma(&self, sigma: f64, xi: f64, ln_psi: f64) -> f64 {
        match self.base {
            Base::Strip => -0.5 * (sigma - xi) * (sigma - xi) + ln_psi,
            Base::HardGinibre => sigma * xi + ln_psi,
        }
    }

    fn top(&self, sigma: f64) -> f64 {
        self.nodes
            .iter()
            .flatten()
            .map(|&(xi, _, lp)| self.ln_psi_sigma(sigma, xi, lp))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// ln ∫ ψ_σ.
    fn ln_single(&self, sigma: f64) -> f64 {
        let top = self.top(sigma);
        let s: f64 =
            self.nodes.iter().flatten().map(|&(xi, w, lp)| w * (self.ln_psi_sigma(sigma, xi, lp) - top).exp()).sum();
        top + s.ln()
    }

    /// ln B(σ, a).
    fn ln_pair(&self, sigma: f64, a: f64) -> f64 {
        let top = self.top(sigma);
        let cut = top - NEGLIGIBLE;
        let mut carried = 0.0;
        let mut prev = self.edges[0];
        let mut total = 0.0;
        for (p, ns) in self.nodes.iter().enumerate() {
            for (i, &(xi, w, lp)) in ns.iter().enumerate() {
                let l = self.ln_psi_sigma(sigma, xi, lp);
                if l < cut {
                    continue;
                }
                let mut inner = carried * (-a * (xi - prev)).exp();
                for &(eta, v, lq) in &self.partial[p][i] {
                    let m = self.ln_psi_sigma(sigma, eta, lq);
                    if m >= cut {
                        inner += v * (m - top - a * (xi - eta)).exp();
                    }
                }
                total += w * (l - top).exp() * inner;
            }
            let b = self.edges[p + 1];
            carried *= (-a * (b - prev)).exp();
            for &(xi, w, lp) in ns {
                let l = self.ln_psi_sigma(sigma, xi, lp);
                if l >= cut {
                    carried += w * (l - top - a * (b - xi)).exp();
                }
            }
            prev = b;
        }
        2.0 * top + (2.0 * total).ln()
    }
}

/// Strip-Fourier Cauchy transform of one profile.
pub struct CauchyTransform {
    profile: LimitProfile,
    cutoff: f64,
    /// Shared window grid; `None` when the window is infinite and depends on x.
    grid: Option<WindowGrid>,
}

impl CauchyTransform {
    pub fn new(profile: LimitProfile, cutoff: f64) -> Result<Self> {
        profile.check()?;
        if !(cutoff > 0.0 && cutoff.is_finite()) {
            return Err(Error::Config(format!("cutoff must be positive, got {cutoff}")));
        }
        let grid = match profile {
            LimitProfile::GinibreHard => {
                Some(WindowGrid::new(Base::HardGinibre, 0.0, 1.0, &|xi: f64| if xi > 0.0 { xi.ln() } else { f64::NEG_INFINITY }))
            }
            _ => {
                let strip = profile.strip().expect("strip form");
                let (lo, hi) = strip.window;
                if lo.is_finite() && hi.is_finite() {
                    Some(WindowGrid::new(Base::Strip, lo, hi, &|xi| strip.weight.ln_value(xi)))
                } else {
                    None
                }
            }
        };
        Ok(Self { profile, cutoff, grid })
    }

    /// Grid for an infinite window, truncated where ψ_σ is negligible for
    /// every σ reached from x.
    fn grid_for(&self, x: f64) -> WindowGrid {
        let strip = self.profile.strip().expect("strip form");
        let (lo, hi) = strip.window;
        let reach = 2.0 * x.abs() + self.cutoff + 14.0;
        WindowGrid::new(Base::Strip, lo.max(-reach), hi.min(reach), &|xi| strip.weight.ln_value(xi))
    }

    /// C at Re z = x in unscaled coordinates.
    fn unscaled(&self, x: f64) -> f64 {
        let local;
        let grid = match &self.grid {
            Some(g) => g,
            None => {
                local = self.grid_for(x);
                &local
            }
        };
        let k = self.profile.dilation();
        let (slo, shi) = self.profile.support();
        let (slo, shi) = (slo * k, shi * k);
        let ln_a = grid.ln_single(2.0 * x);
        let hard = matches!(self.profile, LimitProfile::GinibreHard);
        let integrand = |s: f64| -> f64 {
            let d = x - s;
            let gauss = if hard { 0.0 } else { -d * d };
            let ln = gauss + self.profile.confinement(2.0 * s) + grid.ln_pair(x + s, d.abs()) - ln_a;
            d.signum() * ln.exp()
        };
        let lo = slo.max(x - self.cutoff);
        let hi = shi.min(x + self.cutoff);
        let mut breaks = vec![lo, hi, x];
        if let Some(rho) = self.profile.rho() {
            breaks.extend([-0.25 * rho, 0.25 * rho]);
        }
        breaks.retain(|b| *b >= lo && *b <= hi);
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        let mut total = 0.0;
        for w in breaks.windows(2) {
            total += panels(&integrand, w[0], w[1]);
        }
        if hard {
            // no Gaussian factor: continue to −∞ on geometric panels
            let mut a = lo;
            let mut step = self.cutoff;
            for _ in 0..60 {
                let part = panels(&integrand, a - step, a);
                total += part;
                if part.abs() <= 1e-16 * total.abs() {
                    break;
                }
                a -= step;
                step *= 2.0;
            }
        }
        total
    }

    /// C(z); refused where R(z) ≤ 1e-10.
    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        let r = self.profile.density(z.re);
        if !(r > MIN_DENSITY) {
            return Err(Error::domain(format!("R({}) = {r:e} too small for the Cauchy transform", z.re)));
        }
        let k = self.profile.dilation();
        Ok(Complex64::new(k * self.unscaled(k * z.re), 0.0))
    }
}

/// GL16 on panels no wider than OUTER_PANEL.
fn panels<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    if !(b > a) {
        return 0.0;
    }
    let m = ((b - a) / OUTER_PANEL).ceil().max(1.0) as usize;
    let g = rule(ORDER);
    (0..m)
        .map(|i| {
            let lo = a + (b - a) * i as f64 / m as f64;
            let hi = a + (b - a) * (i + 1) as f64 / m as f64;
            g.integrate(lo, hi, f)
        })
        .sum()
}

/// C(z) by the strip-Fourier reduction.
pub fn cauchy_transform(profile: &LimitProfile, z: Complex64, cutoff: f64) -> Result<Complex64> {
    CauchyTransform::new(*profile, cutoff)?.eval(z)
}

/// C(z) by direct quadrature over the disk |w − z| ≤ L in polar coordinates
/// centred at z; the Jacobian cancels the 1/(z − w) singularity. Slower and
/// truncated in every direction; kept as an independent cross-check.
pub fn cauchy_transform_polar(profile: &LimitProfile, z: Complex64, cutoff: f64, angular: usize) -> Result<Complex64> {
    let r = profile.density(z.re);
    if !(r > MIN_DENSITY) {
        return Err(Error::domain(format!("R({}) = {r:e} too small for the Cauchy transform", z.re)));
    }
    let dirs: Vec<Complex64> =
        (0..angular).map(|k| Complex64::from_polar(1.0, 2.0 * PI * k as f64 / angular as f64)).collect();
    let radial = |t: f64| -> f64 {
        // the real part survives: C is real for strip profiles
        let s: Complex64 = dirs
            .iter()
            .map(|e| {
                let k = profile.kernel(z, z + e * t);
                -k.norm_sqr() * e.conj()
            })
            .sum();
        s.re * 2.0 / angular as f64
    };
    let v = panels(&radial, 0.0, cutoff);
    Ok(Complex64::new(v / r, 0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WardPoint {
    pub x: f64,
    pub y: f64,
    pub re: f64,
    pub im: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WardReport {
    pub variant: String,
    pub step: f64,
    pub cutoff: f64,
    pub quadrature_order: usize,
    pub include_indicator: bool,
    pub points: Vec<WardPoint>,
    /// Grid points within 3h of a wall or indicator line, or off the support.
    pub excluded: Vec<(f64, f64)>,
    pub max_abs: f64,
}

impl WardReport {
    /// Max |residual| over points with |Re z − x| ≤ tol for some listed x.
    pub fn max_abs_near(&self, xs: &[f64], tol: f64) -> f64 {
        self.points
            .iter()
            .filter(|p| xs.iter().any(|x| (p.x - x).abs() <= tol))
            .map(|p| p.re.hypot(p.im))
            .fold(0.0, f64::max)
    }
}

/// Lines Re z = c where the equation is not stated pointwise.
fn singular_lines(profile: &LimitProfile) -> Vec<f64> {
    let (lo, hi) = profile.support();
    let mut v: Vec<f64> = [lo, hi].into_iter().filter(|x| x.is_finite()).collect();
    if let LimitProfile::Interpolated { rho, .. } = profile {
        v.extend([-0.25 * rho, 0.25 * rho]);
    }
    v
}

/// Right-hand side without the Δ log R term.
fn source(profile: &LimitProfile, x: f64, r: f64, include_indicator: bool) -> f64 {
    let background = match profile {
        LimitProfile::GinibreHard => 0.0,
        _ => profile.dilation().powi(2),
    };
    let mut v = r - background;
    if include_indicator {
        if let LimitProfile::Interpolated { rho, c1, c2 } = *profile {
            if x < -0.25 * rho && c1.is_finite() {
                v += 1.0 - c1;
            }
            if x > 0.25 * rho && c2.is_finite() {
                v += 1.0 - c2;
            }
        }
    }
    v
}

/// ∂̄C − (R − background − Δ log R + indicator terms) on a grid, with ∂̄ and
/// Δ = ∂∂̄ by central differences.
pub fn ward_residual(profile: &LimitProfile, grid: &[(f64, f64)], opts: &WardOptions) -> Result<WardReport> {
    let h = opts.step;
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Config(format!("step must be positive, got {h}")));
    }
    let ct = CauchyTransform::new(*profile, opts.cutoff)?;
    let lines = singular_lines(profile);
    let (mut keep, mut excluded) = (Vec::new(), Vec::new());
    for &(x, y) in grid {
        let near = lines.iter().any(|c| (x - c).abs() < 3.0 * h);
        if near || !profile.contains(x) || !(profile.density(x) > MIN_DENSITY) {
            excluded.push((x, y));
        } else {
            keep.push((x, y));
        }
    }
    // every field depends on Re z only: evaluate once per abscissa
    let mut xs: Vec<f64> = keep.iter().flat_map(|&(x, _)| [x - h, x, x + h]).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let values: Vec<(f64, f64)> = xs
        .par_iter()
        .map(|&x| -> Result<(f64, f64)> {
            let c = ct.eval(Complex64::new(x, 0.0))?.re;
            Ok((c, profile.density(x)))
        })
        .collect::<Result<_>>()?;
    let lookup = |x: f64, y: f64| -> (f64, f64) {
        let _ = y;
        let i = xs.partition_point(|v| *v < x);
        let i = if i < xs.len() && xs[i] == x { i } else { i.min(xs.len() - 1) };
        values[i]
    };
    let points: Vec<WardPoint> = keep
        .iter()
        .map(|&(x, y)| {
            let (cxp, rxp) = lookup(x + h, y);
            let (cxm, rxm) = lookup(x - h, y);
            let (cyp, ryp) = lookup(x, y + h);
            let (cym, rym) = lookup(x, y - h);
            let (_, r) = lookup(x, y);
            let dbar = Complex64::new((cxp - cxm) / (4.0 * h), (cyp - cym) / (4.0 * h));
            let lap = 0.25 * (rxp.ln() + rxm.ln() + ryp.ln() + rym.ln() - 4.0 * r.ln()) / (h * h);
            let rhs = source(profile, x, r, opts.include_indicator) - lap;
            let res = dbar - rhs;
            WardPoint { x, y, re: res.re, im: res.im }
        })
        .collect();
    if let Some(p) = points.iter().find(|p| !(p.re.is_finite() && p.im.is_finite())) {
        return Err(Error::Consistency(format!("non-finite Ward residual at ({}, {})", p.x, p.y)));
    }
    let max_abs = points.iter().map(|p| p.re.hypot(p.im)).fold(0.0, f64::max);
    Ok(WardReport {
        variant: profile.to_string(),
        step: h,
        cutoff: opts.cutoff,
        quadrature_order: ORDER,
        include_indicator: opts.include_indicator,
        points,
        excluded,
        max_abs,
    })
}

/// Rectangular grid [x0, x1] × [y0, y1] with the given spacing.
pub fn rect_grid(x: (f64, f64), y: (f64, f64), spacing: f64) -> Vec<(f64, f64)> {
    let nx = ((x.1 - x.0) / spacing).round() as usize;
    let ny = ((y.1 - y.0) / spacing).round() as usize;
    let mut g = Vec::with_capacity((nx + 1) * (ny + 1));
    for i in 0..=nx {
        for j in 0..=ny {
            g.push((x.0 + spacing * i as f64, y.0 + spacing * j as f64));
        }
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;

    fn free(rho: f64) -> LimitProfile {
        LimitProfile::Free { rho }
    }

    #[test]
    fn free_residual_is_small_and_second_order() {
        let grid = rect_grid((-0.2, 0.2), (-0.2, 0.2), 0.1);
        let coarse = ward_residual(&free(1.0), &grid, &WardOptions { step: 0.02, ..Default::default() }).unwrap();
        let fine = ward_residual(&free(1.0), &grid, &WardOptions { step: 0.01, ..Default::default() }).unwrap();
        assert!(coarse.max_abs <= 5e-3, "{}", coarse.max_abs);
        let ratio = coarse.max_abs / fine.max_abs;
        assert!((3.0..=5.0).contains(&ratio), "ratio {ratio}");
        assert!(coarse.excluded.is_empty());
    }

    #[test]
    fn y_invariance_and_cutoff_stability() {
        let grid = rect_grid((0.1, 0.1), (-0.2, 0.2), 0.1);
        let a = ward_residual(&free(1.0), &grid, &WardOptions { cutoff: 6.0, ..Default::default() }).unwrap();
        let b = ward_residual(&free(1.0), &grid, &WardOptions { cutoff: 8.0, ..Default::default() }).unwrap();
        for p in &a.points {
            assert!((p.re - a.points[0].re).abs() <= 1e-10 && p.im.abs() <= 1e-10);
        }
        assert!((a.max_abs - b.max_abs).abs() <= 1e-9);
    }

    #[test]
    fn far_annulus_is_negligible() {
        let z = Complex64::new(0.1, 0.0);
        let c6 = cauchy_transform(&free(1.0), z, 6.0).unwrap();
        let c8 = cauchy_transform(&free(1.0), z, 8.0).unwrap();
        assert!((c8 - c6).norm() <= 1e-12 * c8.norm().max(1.0));
    }

    #[test]
    fn polar_cross_check() {
        let p = free(1.0);
        let z = Complex64::new(0.15, 0.3);
        let strip = cauchy_transform(&p, z, 8.0).unwrap();
        let polar = cauchy_transform_polar(&p, z, 8.0, 64).unwrap();
        assert!((strip - polar).norm() <= 2e-3 * strip.norm().max(1e-3), "{strip} {polar}");
    }

    #[test]
    fn kernel_modulus_is_symmetric() {
        let p = LimitProfile::Interpolated { rho: 4.0, c1: 4.0, c2: 2.0 };
        for (z, w) in [((0.3, 0.1), (-0.7, 1.2)), ((1.4, -0.4), (0.2, 0.9))] {
            let (z, w) = (Complex64::new(z.0, z.1), Complex64::new(w.0, w.1));
            let (a, b) = (p.kernel(z, w).norm(), p.kernel(w, z).norm());
            assert!((a - b).abs() <= 1e-12 * a.max(1e-300));
        }
    }

    #[test]
    fn indicator_ablation() {
        let p = LimitProfile::Interpolated { rho: 4.0, c1: 4.0, c2: 4.0 };
        let grid: Vec<(f64, f64)> = [-1.5, 1.5].iter().map(|&x| (x, 0.0)).collect();
        let with = ward_residual(&p, &grid, &WardOptions::default()).unwrap();
        let without = ward_residual(&p, &grid, &WardOptions { include_indicator: false, ..Default::default() }).unwrap();
        assert!(without.max_abs >= 10.0 * with.max_abs, "{} {}", with.max_abs, without.max_abs);
    }

    #[test]
    fn walls_and_lines_are_excluded() {
        let p = LimitProfile::SoftHard { rho: 4.0 };
        let grid = vec![(0.99, 0.0), (0.5, 0.0), (1.5, 0.0)];
        let r = ward_residual(&p, &grid, &WardOptions::default()).unwrap();
        assert_eq!(r.points.len(), 1);
        assert_eq!(r.excluded.len(), 2);
        assert!(cauchy_transform(&p, Complex64::new(1.5, 0.0), 8.0).is_err());
    }
}
