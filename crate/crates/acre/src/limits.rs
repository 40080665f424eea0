//! Limiting 1-point functions and kernels of the rescaled ensembles.
//!
//! Apart from the hard-edge Ginibre limit, every variant has the shape
//!
//! R(x) = 1_X(x) e^{I(2x)} ∫_Ξ e^{-(2x-ξ)²/2} ψ(ξ) dξ,
//!
//! with a window Ξ, a positive weight ψ given by a Gaussian mass in closed
//! form, and a confinement exponent I that vanishes except for the
//! interpolated variant. [`Strip`] captures that shape once so densities,
//! kernels and the Ward checks share one evaluator.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::potentials::{BoundaryCondition, EnsembleSpec};
use crate::quad::{adaptive, adaptive_complex};
use crate::special::{gauss_mass, ln_gauss_mass, ln_gauss_upper, ln_sum_exp, SQRT_2PI};

/// Confinement exponent for the interpolated boundary condition.
///
/// An infinite c makes the exponent −∞ outside the window on that side.
pub fn i_c(t: f64, c1: f64, c2: f64, rho: f64) -> f64 {
    let h = 0.5 * rho;
    let mut v = 0.0;
    let below = (t + h).min(0.0);
    if below < 0.0 {
        if c1.is_infinite() {
            return f64::NEG_INFINITY;
        }
        v += 0.5 * (1.0 - c1) * below * below;
    }
    let above = (t - h).max(0.0);
    if above > 0.0 {
        if c2.is_infinite() {
            return f64::NEG_INFINITY;
        }
        v += 0.5 * (1.0 - c2) * above * above;
    }
    v
}

/// ln ∫ e^{-(t-ξ)²/2 + I(t)} dt, summed over the central window and the two
/// clamped sides, each a Gaussian segment in closed form.
pub fn ln_phi_c(xi: f64, c1: f64, c2: f64, rho: f64) -> f64 {
    let h = 0.5 * rho;
    let mut parts = [f64::NEG_INFINITY; 3];
    parts[0] = ln_gauss_mass(-h - xi, h - xi);
    let side = |c: f64, d: f64| -> f64 {
        if c.is_infinite() {
            return f64::NEG_INFINITY;
        }
        0.5 * d * d * (1.0 / c - 1.0) - 0.5 * c.ln() + ln_gauss_upper(-d / c.sqrt())
    };
    parts[1] = side(c2, xi - h);
    parts[2] = side(c1, -xi - h);
    ln_sum_exp(&parts)
}

pub fn phi_c(xi: f64, c1: f64, c2: f64, rho: f64) -> f64 {
    ln_phi_c(xi, c1, c2, rho).exp()
}

/// ∫_{-ρ/2}^{ρ/2} e^{-(u-ξ)²/2} / Φ(ξ) dξ.
pub fn f_c(u: f64, c1: f64, c2: f64, rho: f64) -> f64 {
    let strip = Strip { window: (-0.5 * rho, 0.5 * rho), weight: Weight::Confined { c1, c2, rho } };
    strip.gaussian_integral(u)
}

/// (√((1−τ)²/4 + 1/ρ²) + (1−τ)/2)⁻¹.
pub fn c_of_tau(tau: f64, rho: f64) -> f64 {
    let half = 0.5 * (1.0 - tau);
    1.0 / ((half * half + 1.0 / (rho * rho)).sqrt() + half)
}

/// The weight ψ inside the window integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Weight {
    /// 1 / ∫_{lo-ξ}^{hi-ξ} e^{-s²/2} ds; either end may be infinite.
    Window { lo: f64, hi: f64 },
    /// 1 / Φ(ξ) for the interpolated confinement.
    Confined { c1: f64, c2: f64, rho: f64 },
}

impl Weight {
    pub fn ln_value(&self, xi: f64) -> f64 {
        match *self {
            Weight::Window { lo, hi } => {
                if hi == f64::INFINITY && lo == f64::NEG_INFINITY {
                    -SQRT_2PI.ln()
                } else {
                    -ln_gauss_mass(lo - xi, hi - xi)
                }
            }
            Weight::Confined { c1, c2, rho } => -ln_phi_c(xi, c1, c2, rho),
        }
    }

    pub fn value(&self, xi: f64) -> f64 {
        self.ln_value(xi).exp()
    }
}

/// Window Ξ and weight ψ of a strip-type limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Strip {
    pub window: (f64, f64),
    pub weight: Weight,
}

impl Strip {
    /// ∫_Ξ e^{-(σ-ξ)²/2 + iDξ} ψ(ξ) dξ as (ln scale, value); the integral is
    /// e^{scale}·value.
    ///
    /// The log integrand is concave in ξ for every weight used here, so it is
    /// normalised at its maximum and truncated 60 log units below it.
    pub fn transform(&self, sigma: f64, d: f64) -> (f64, Complex64) {
        let f = |xi: f64| -0.5 * (sigma - xi) * (sigma - xi) + self.weight.ln_value(xi);
        let (w0, w1) = self.window;
        let lo = if w0.is_finite() { w0 } else { sigma.min(w1) - 64.0 };
        let hi = if w1.is_finite() { w1 } else { sigma.max(lo) + 64.0 };
        let peak = golden_max(&f, lo, hi);
        let top = f(peak);
        let reach = |dir: f64, end: f64| -> f64 {
            let mut t = 0.5;
            loop {
                let x = peak + dir * t;
                if (x - end) * dir >= 0.0 {
                    return end;
                }
                if f(x) < top - 60.0 {
                    return x;
                }
                t *= 2.0;
            }
        };
        let left = reach(-1.0, lo);
        let right = reach(1.0, hi);
        // rounding noise of the log integrand when its two terms cancel
        let size = |x: f64| 0.5 * (sigma - x) * (sigma - x) + self.weight.ln_value(x).abs();
        let rel = 1e-14f64.max(16.0 * f64::EPSILON * (1.0 + size(left).max(size(right)).max(size(peak))));
        let value = if d == 0.0 {
            let g = |x: f64| (f(x) - top).exp();
            Complex64::new(adaptive(&g, left, peak, 1e-17, rel) + adaptive(&g, peak, right, 1e-17, rel), 0.0)
        } else {
            let g = |x: f64| Complex64::from_polar((f(x) - top).exp(), d * x);
            adaptive_complex(&g, left, peak, 1e-17, rel) + adaptive_complex(&g, peak, right, 1e-17, rel)
        };
        (top, value)
    }

    /// ∫_Ξ e^{-(u-ξ)²/2} ψ(ξ) dξ.
    pub fn gaussian_integral(&self, u: f64) -> f64 {
        let (m, v) = self.transform(u, 0.0);
        m.exp() * v.re
    }
}

fn golden_max<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (lo, hi);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..60 {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let mid = 0.5 * (a + b);
    [lo, hi, mid].into_iter().max_by(|x, y| f(*x).total_cmp(&f(*y))).unwrap_or(mid)
}

/// A named limiting profile with its parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LimitProfile {
    Free { rho: f64 },
    SoftHard { rho: f64 },
    Interpolated { rho: f64, c1: f64, c2: f64 },
    HardAnnulus { rho: f64, tau1: f64, tau2: f64 },
    /// Outer hard wall at r_τ, rescaled with √(nΔQ(1)).
    HardDiskOuter { rho: f64, tau: f64 },
    /// Outer hard wall at r_τ, rescaled with the mean spacing there.
    HardDiskRescaled { rho: f64, tau: f64 },
    /// ρ → ∞ limit of the rescaled hard disk at τ = 1.
    GinibreSoftHard,
    /// ρ → ∞ limit of the rescaled hard disk at τ < 1.
    GinibreHard,
}

impl LimitProfile {
    /// The profile the finite-n ensemble converges to under its default zoom.
    pub fn for_spec(spec: &EnsembleSpec) -> Self {
        let rho = spec.rho;
        match spec.bc {
            BoundaryCondition::Free => LimitProfile::Free { rho },
            BoundaryCondition::Interpolated { c1, c2 } if c1.is_infinite() && c2.is_infinite() => {
                LimitProfile::SoftHard { rho }
            }
            BoundaryCondition::Interpolated { c1, c2 } => LimitProfile::Interpolated { rho, c1, c2 },
            BoundaryCondition::HardAnnulus { tau1, tau2 } => LimitProfile::HardAnnulus { rho, tau1, tau2 },
            BoundaryCondition::HardDisk { tau } => LimitProfile::HardDiskRescaled { rho, tau },
        }
    }

    pub fn check(&self) -> Result<()> {
        let rho_ok = |rho: f64| {
            if rho > 0.0 && rho.is_finite() {
                Ok(())
            } else {
                Err(Error::domain(format!("ρ must be positive and finite, got {rho}")))
            }
        };
        match *self {
            LimitProfile::Free { rho } | LimitProfile::SoftHard { rho } => rho_ok(rho),
            LimitProfile::Interpolated { rho, c1, c2 } => {
                rho_ok(rho)?;
                BoundaryCondition::Interpolated { c1, c2 }.check()
            }
            LimitProfile::HardAnnulus { rho, tau1, tau2 } => {
                rho_ok(rho)?;
                BoundaryCondition::HardAnnulus { tau1, tau2 }.check()
            }
            LimitProfile::HardDiskOuter { rho, tau } | LimitProfile::HardDiskRescaled { rho, tau } => {
                rho_ok(rho)?;
                BoundaryCondition::HardDisk { tau }.check()
            }
            LimitProfile::GinibreSoftHard | LimitProfile::GinibreHard => Ok(()),
        }
    }

    pub fn rho(&self) -> Option<f64> {
        match *self {
            LimitProfile::Free { rho }
            | LimitProfile::SoftHard { rho }
            | LimitProfile::Interpolated { rho, .. }
            | LimitProfile::HardAnnulus { rho, .. }
            | LimitProfile::HardDiskOuter { rho, .. }
            | LimitProfile::HardDiskRescaled { rho, .. } => Some(rho),
            _ => None,
        }
    }

    /// Argument scale k: the profile is k² R(kx) of an unscaled strip profile.
    pub fn dilation(&self) -> f64 {
        match *self {
            LimitProfile::HardDiskRescaled { rho, tau } => c_of_tau(tau, rho) / rho,
            _ => 1.0,
        }
    }

    /// Window form of the unscaled profile; `None` for the hard-edge Ginibre limit.
    pub fn strip(&self) -> Option<Strip> {
        let window = |lo: f64, hi: f64| Weight::Window { lo, hi };
        let s = match *self {
            LimitProfile::Free { rho } => {
                Strip { window: (-0.5 * rho, 0.5 * rho), weight: window(f64::NEG_INFINITY, f64::INFINITY) }
            }
            LimitProfile::SoftHard { rho } => {
                Strip { window: (-0.5 * rho, 0.5 * rho), weight: window(-0.5 * rho, 0.5 * rho) }
            }
            LimitProfile::Interpolated { rho, c1, c2 } => {
                Strip { window: (-0.5 * rho, 0.5 * rho), weight: Weight::Confined { c1, c2, rho } }
            }
            LimitProfile::HardAnnulus { rho, tau1, tau2 } => Strip {
                window: (-0.5 * rho, 0.5 * rho),
                weight: window(rho * (tau1 - 0.5), rho * (tau2 - 0.5)),
            },
            LimitProfile::HardDiskOuter { rho, tau } | LimitProfile::HardDiskRescaled { rho, tau } => {
                Strip { window: (-rho * tau, rho * (1.0 - tau)), weight: window(f64::NEG_INFINITY, 0.0) }
            }
            LimitProfile::GinibreSoftHard => {
                Strip { window: (f64::NEG_INFINITY, 0.0), weight: window(f64::NEG_INFINITY, 0.0) }
            }
            LimitProfile::GinibreHard => return None,
        };
        Some(s)
    }

    /// Closed x-interval carrying the unscaled profile.
    fn strip_support(&self) -> (f64, f64) {
        match *self {
            LimitProfile::Free { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            LimitProfile::SoftHard { rho } => (-0.25 * rho, 0.25 * rho),
            LimitProfile::Interpolated { rho, c1, c2 } => (
                if c1.is_infinite() { -0.25 * rho } else { f64::NEG_INFINITY },
                if c2.is_infinite() { 0.25 * rho } else { f64::INFINITY },
            ),
            LimitProfile::HardAnnulus { rho, tau1, tau2 } => {
                (0.25 * rho * (2.0 * tau1 - 1.0), 0.25 * rho * (2.0 * tau2 - 1.0))
            }
            LimitProfile::HardDiskOuter { .. }
            | LimitProfile::HardDiskRescaled { .. }
            | LimitProfile::GinibreSoftHard
            | LimitProfile::GinibreHard => (f64::NEG_INFINITY, 0.0),
        }
    }

    /// Closed x-interval outside which the density vanishes.
    pub fn support(&self) -> (f64, f64) {
        let (lo, hi) = self.strip_support();
        let k = self.dilation();
        (lo / k, hi / k)
    }

    pub fn contains(&self, x: f64) -> bool {
        let (lo, hi) = self.support();
        x >= lo && x <= hi
    }

    /// Confinement exponent I(t), zero except for the interpolated variant.
    pub fn confinement(&self, t: f64) -> f64 {
        match *self {
            LimitProfile::Interpolated { rho, c1, c2 } => i_c(t, c1, c2, rho),
            _ => 0.0,
        }
    }

    /// R(x); the value depends on Re z only.
    pub fn density(&self, x: f64) -> f64 {
        if !self.contains(x) {
            return 0.0;
        }
        let k = self.dilation();
        let t = k * x;
        let v = match *self {
            LimitProfile::Free { rho } => gauss_mass(-0.5 * rho - 2.0 * t, 0.5 * rho - 2.0 * t) / SQRT_2PI,
            LimitProfile::GinibreHard => hard_ginibre_factor(Complex64::new(2.0 * t, 0.0)).re,
            _ => {
                let strip = self.strip().expect("strip form");
                let (m, val) = strip.transform(2.0 * t, 0.0);
                (m + self.confinement(2.0 * t)).exp() * val.re
            }
        };
        k * k * v
    }

    /// K(z, w) = G(z, w)·L(z + w̄), zero when either point is off the support.
    pub fn kernel(&self, z: Complex64, w: Complex64) -> Complex64 {
        if !self.contains(z.re) || !self.contains(w.re) {
            return Complex64::new(0.0, 0.0);
        }
        let k = self.dilation();
        let (z, w) = (z * k, w * k);
        let v = match *self {
            LimitProfile::GinibreHard => hard_ginibre_factor(z + w.conj()),
            _ => {
                let strip = self.strip().expect("strip form");
                let sigma = z.re + w.re;
                let d = z.im - w.im;
                let (m, val) = strip.transform(sigma, d);
                let dx = z.re - w.re;
                let ln_mod = -0.5 * dx * dx
                    + m
                    + 0.5 * self.confinement(2.0 * z.re)
                    + 0.5 * self.confinement(2.0 * w.re);
                let phase = (z * w.conj()).im - d * sigma;
                Complex64::from_polar(ln_mod.exp(), phase) * val
            }
        };
        v * (k * k)
    }

    /// ∫ R(x) dx implied by the formulas (Fubini).
    pub fn expected_mass(&self) -> f64 {
        match *self {
            LimitProfile::HardDiskRescaled { rho, tau } => 0.5 * c_of_tau(tau, rho),
            LimitProfile::GinibreSoftHard => f64::INFINITY,
            LimitProfile::GinibreHard => 0.5,
            _ => 0.5 * self.rho().expect("finite width"),
        }
    }

    /// ∫ R(x) dx by quadrature.
    pub fn cross_section_mass(&self) -> f64 {
        match *self {
            LimitProfile::GinibreSoftHard => return f64::INFINITY,
            LimitProfile::GinibreHard => {
                // analytic tail beyond x = -X: (1 - e^{-2X}) / (4X)
                let x = 50.0;
                let f = |t: f64| self.density(t);
                let body = adaptive(&f, -x, -1.0, 1e-15, 1e-14) + adaptive(&f, -1.0, 0.0, 1e-15, 1e-14);
                return body + (1.0 - (-2.0 * x).exp()) / (4.0 * x);
            }
            _ => {}
        }
        let f = |t: f64| self.density(t);
        let (lo, hi) = self.support();
        let mut cuts: Vec<f64> = Vec::new();
        let rho = self.rho().unwrap_or(1.0);
        let k = self.dilation();
        for p in [-0.25 * rho, 0.0, 0.25 * rho] {
            let p = p / k;
            if p > lo && p < hi {
                cuts.push(p);
            }
        }
        if lo.is_finite() {
            cuts.insert(0, lo);
        }
        if hi.is_finite() {
            cuts.push(hi);
        }
        let mut total = 0.0;
        for w in cuts.windows(2) {
            total += adaptive(&f, w[0], w[1], 1e-15, 1e-14);
        }
        let first = cuts[0];
        let last = *cuts.last().expect("nonempty cuts");
        let scale = 1.0 / k;
        if !lo.is_finite() {
            total += tail(&f, first, -scale);
        }
        if !hi.is_finite() {
            total += tail(&f, last, scale);
        }
        total
    }
}

/// ∫ from `start` outward in geometric steps until panels become negligible.
fn tail<F: Fn(f64) -> f64>(f: &F, start: f64, step: f64) -> f64 {
    let mut total = 0.0;
    let mut a = start;
    let mut h = step;
    for _ in 0..200 {
        let b = a + h;
        let (lo, hi) = if h > 0.0 { (a, b) } else { (b, a) };
        let part = adaptive(f, lo, hi, 1e-16, 1e-14);
        total += part;
        if part.abs() <= 1e-17 * total.abs().max(1e-300) && f(b).abs() <= f(a).abs() {
            break;
        }
        a = b;
        h *= 1.5;
    }
    total
}

/// ∫₀¹ ξ e^{sξ} dξ.
fn hard_ginibre_factor(s: Complex64) -> Complex64 {
    if s.norm() < 1.0 {
        // Σ s^k / (k! (k + 2))
        let mut term = Complex64::new(1.0, 0.0);
        let mut sum = Complex64::new(0.0, 0.0);
        for k in 0..40 {
            sum += term / (k as f64 + 2.0);
            term = term * s / (k as f64 + 1.0);
        }
        sum
    } else {
        (s.exp() * (s - 1.0) + 1.0) / (s * s)
    }
}

pub fn r_limit(profile: &LimitProfile, x: f64) -> f64 {
    profile.density(x)
}

pub fn k_limit(profile: &LimitProfile, z: Complex64, w: Complex64) -> Complex64 {
    profile.kernel(z, w)
}

fn fmt_param(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:?}")
    }
}

impl fmt::Display for LimitProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = fmt_param;
        match *self {
            LimitProfile::Free { rho } => write!(f, "free(rho={})", p(rho)),
            LimitProfile::SoftHard { rho } => write!(f, "softhard(rho={})", p(rho)),
            LimitProfile::Interpolated { rho, c1, c2 } => {
                write!(f, "interpolated(rho={},c1={},c2={})", p(rho), p(c1), p(c2))
            }
            LimitProfile::HardAnnulus { rho, tau1, tau2 } => {
                write!(f, "hard-annulus(rho={},tau1={},tau2={})", p(rho), p(tau1), p(tau2))
            }
            LimitProfile::HardDiskOuter { rho, tau } => write!(f, "hard-disk-outer(rho={},tau={})", p(rho), p(tau)),
            LimitProfile::HardDiskRescaled { rho, tau } => {
                write!(f, "hard-disk-rescaled(rho={},tau={})", p(rho), p(tau))
            }
            LimitProfile::GinibreSoftHard => write!(f, "ginibre-softhard"),
            LimitProfile::GinibreHard => write!(f, "ginibre-hard"),
        }
    }
}

/// |sin(d) / (π d)|.
pub fn sine_kernel_modulus(d: f64) -> f64 {
    if d == 0.0 {
        1.0 / PI
    } else {
        (d.sin() / (PI * d)).abs()
    }
}

/// Cross-section average of the dilated hard-annulus kernel modulus,
/// (1/π) ∫ |K̃(x + iu, x + iv)| dx over the strip, K̃(z, w) = a⁻² K(z/a, w/a)
/// with a = ρ/2.
pub fn circular_cross_section(rho: f64, tau1: f64, tau2: f64, u: f64, v: f64) -> f64 {
    let a = 0.5 * rho;
    let strip = LimitProfile::HardAnnulus { rho, tau1, tau2 }.strip().expect("strip form");
    let d = (u - v) / a;
    // σ = 2x/a runs over [2a(τ₁ − ½), 2a(τ₂ − ½)] and dx = (a/2) dσ
    let f = |sigma: f64| {
        let (m, val) = strip.transform(sigma, d);
        m.exp() * val.norm()
    };
    let lo = 2.0 * a * (tau1 - 0.5);
    let hi = 2.0 * a * (tau2 - 0.5);
    adaptive(&f, lo, hi, 1e-15, 1e-13) / (2.0 * a * PI)
}

/// Largest gap between the cross-section kernel modulus and the sine kernel
/// modulus over the (u, v) pairs.
pub fn sine_limit_error(rho: f64, tau1: f64, tau2: f64, points: &[(f64, f64)]) -> Result<f64> {
    if !(rho > 0.0 && rho <= 0.2) {
        return Err(Error::domain(format!("circular limit needs 0 < ρ ≤ 0.2, got {rho}")));
    }
    BoundaryCondition::HardAnnulus { tau1, tau2 }.check()?;
    Ok(points
        .iter()
        .map(|&(u, v)| (circular_cross_section(rho, tau1, tau2, u, v) - sine_kernel_modulus(u - v)).abs())
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::adaptive_pieces;

    fn brute_phi(xi: f64, c1: f64, c2: f64, rho: f64) -> f64 {
        let f = |t: f64| (-0.5 * (t - xi) * (t - xi) + i_c(t, c1, c2, rho)).exp();
        let h = 0.5 * rho;
        let span = 60.0 / c1.min(c2).min(1.0).sqrt();
        let lo = if c1.is_infinite() { -h } else { xi.min(-h) - span };
        let hi = if c2.is_infinite() { h } else { xi.max(h) + span };
        let mut cuts = vec![lo];
        for p in [-h, xi, h] {
            if p > lo && p < hi {
                cuts.push(p);
            }
        }
        cuts.sort_by(f64::total_cmp);
        cuts.push(hi);
        adaptive_pieces(&f, &cuts, 1e-40, 1e-14)
    }

    #[test]
    fn confinement_exponent() {
        assert_eq!(i_c(0.3, 3.0, 5.0, 4.0), 0.0);
        assert_eq!(i_c(-7.0, 1.0, 1.0, 4.0), 0.0);
        assert_eq!(i_c(-3.0, 3.0, 1.0, 4.0), -1.0);
        assert_eq!(i_c(2.0, 3.0, f64::INFINITY, 4.0), 0.0);
        assert_eq!(i_c(2.5, 3.0, f64::INFINITY, 4.0), f64::NEG_INFINITY);
    }

    #[test]
    fn phi_closed_form() {
        for xi in [-5.0, -1.0, 0.0, 0.7, 3.0] {
            assert!((phi_c(xi, 1.0, 1.0, 4.0) - SQRT_2PI).abs() < 1e-14);
        }
        assert!((phi_c(0.0, f64::INFINITY, f64::INFINITY, 4.0) - 2.392_576_026_645_216_4).abs() < 1e-14);
        for &(xi, c1, c2) in &[(12.0, 4.0, 4.0), (-12.0, 0.5, 3.0), (0.3, 4.0, 0.25), (2.0, f64::INFINITY, 2.0)] {
            let got = phi_c(xi, c1, c2, 4.0);
            let want = brute_phi(xi, c1, c2, 4.0);
            assert!(((got - want) / want).abs() <= 1e-9, "xi={xi} c=({c1},{c2}) {got} {want}");
        }
    }

    #[test]
    fn phi_symmetry_under_side_swap() {
        for xi in [0.0, 0.5, 2.0, 7.0] {
            let a = ln_phi_c(xi, 3.0, 0.5, 4.0);
            let b = ln_phi_c(-xi, 0.5, 3.0, 4.0);
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn f_c_forms_and_bound() {
        let rho = 4.0;
        for u in [-3.0, 0.0, 1.5] {
            let want = LimitProfile::Free { rho }.density(0.5 * u);
            assert!((f_c(u, 1.0, 1.0, rho) - want).abs() < 1e-13);
        }
        let u = 0.5 * rho + 8.0;
        let max_inv = (0..=400)
            .map(|i| 1.0 / phi_c(-0.5 * rho + rho * i as f64 / 400.0, 3.0, 3.0, rho))
            .fold(0.0, f64::max);
        let v = f_c(u, 3.0, 3.0, rho);
        assert!(v > 0.0 && v <= (-0.5 * 64.0f64).exp() * rho * max_inv);
    }

    #[test]
    fn free_value_at_origin() {
        let r = LimitProfile::Free { rho: 4.0 }.density(0.0);
        assert!((r - 0.954_499_736_103_641_6).abs() < 1e-15);
    }

    #[test]
    fn structural_identities() {
        let rho = 4.0;
        let free = LimitProfile::Free { rho };
        let soft = LimitProfile::SoftHard { rho };
        let one = LimitProfile::Interpolated { rho, c1: 1.0, c2: 1.0 };
        let inf = LimitProfile::Interpolated { rho, c1: f64::INFINITY, c2: f64::INFINITY };
        let annulus01 = LimitProfile::HardAnnulus { rho, tau1: 0.0, tau2: 1.0 };
        let wide = LimitProfile::HardAnnulus { rho, tau1: -1e3, tau2: 1e3 };
        for i in 0..=120 {
            let x = -3.0 + 0.05 * i as f64;
            assert!((one.density(x) - free.density(x)).abs() <= 1e-12, "x={x}");
            assert!((inf.density(x) - soft.density(x)).abs() <= 1e-12, "x={x}");
            assert!((annulus01.density(x) - soft.density(x)).abs() <= 1e-12, "x={x}");
            if x.abs() <= 2.0 {
                assert!((wide.density(x) - free.density(x)).abs() <= 1e-8, "x={x}");
            }
        }
    }

    #[test]
    fn masses_match_identity() {
        for rho in [1.0, 4.0] {
            for p in [
                LimitProfile::Free { rho },
                LimitProfile::SoftHard { rho },
                LimitProfile::Interpolated { rho, c1: 4.0, c2: 0.5 },
                LimitProfile::HardAnnulus { rho, tau1: 0.2, tau2: 0.9 },
                LimitProfile::HardDiskOuter { rho, tau: 0.5 },
                LimitProfile::HardDiskRescaled { rho, tau: 0.75 },
            ] {
                let m = p.cross_section_mass();
                assert!((m - p.expected_mass()).abs() <= 1e-8, "{p}: {m}");
            }
        }
        assert!((LimitProfile::GinibreHard.cross_section_mass() - 0.5).abs() <= 1e-8);
    }

    #[test]
    fn c_of_tau_values() {
        for rho in [0.5, 2.0, 8.0] {
            assert!((c_of_tau(1.0, rho) - rho).abs() < 1e-14 * rho);
        }
        assert!((c_of_tau(0.5, 1e8) - 2.0).abs() < 1e-7);
        let mut prev = 0.0;
        for i in 1..=20 {
            let c = c_of_tau(i as f64 / 20.0, 3.0);
            assert!(c > prev);
            prev = c;
        }
    }

    #[test]
    fn hard_ginibre_limits() {
        assert!((LimitProfile::GinibreHard.density(0.0) - 0.5).abs() < 1e-15);
        assert_eq!(LimitProfile::GinibreHard.density(0.1), 0.0);
        let x = -0.8;
        let y = 2.0 * x;
        let closed = ((y as f64).exp() * (y - 1.0) + 1.0) / (y * y);
        assert!((LimitProfile::GinibreHard.density(x) - closed).abs() < 1e-14);
    }

    #[test]
    fn kernel_diagonal_and_hermitian() {
        let profiles = [
            LimitProfile::Free { rho: 4.0 },
            LimitProfile::SoftHard { rho: 4.0 },
            LimitProfile::Interpolated { rho: 4.0, c1: 4.0, c2: 4.0 },
            LimitProfile::HardAnnulus { rho: 4.0, tau1: 0.1, tau2: 0.8 },
            LimitProfile::HardDiskRescaled { rho: 8.0, tau: 0.5 },
            LimitProfile::GinibreHard,
        ];
        for p in profiles {
            for i in 0..20 {
                let x = -0.9 + 0.045 * i as f64;
                let z = Complex64::new(x.min(0.0), 0.3 * i as f64);
                let k = p.kernel(z, z);
                assert!((k.re - p.density(z.re)).abs() <= 1e-12 * (1.0 + k.re) && k.im.abs() < 1e-12, "{p}");
            }
            let z = Complex64::new(-0.3, 0.4);
            let w = Complex64::new(-0.1, -0.5);
            let a = p.kernel(z, w);
            let b = p.kernel(w, z).conj();
            assert!((a - b).norm() < 1e-12, "{p}");
            let cs = (p.kernel(z, z).re * p.kernel(w, w).re).sqrt();
            assert!(a.norm() <= cs * (1.0 + 1e-12));
        }
    }

    #[test]
    fn wide_free_kernel_approaches_ginibre() {
        let k = LimitProfile::Free { rho: 40.0 }.kernel(Complex64::new(0.0, 0.0), Complex64::new(1.0, 1.0));
        assert!((k.norm() - (-1.0f64).exp()).abs() < 1e-6);
    }

    #[test]
    fn symmetry_of_even_profiles() {
        for p in [
            LimitProfile::Free { rho: 4.0 },
            LimitProfile::SoftHard { rho: 4.0 },
            LimitProfile::Interpolated { rho: 4.0, c1: 3.0, c2: 3.0 },
            LimitProfile::HardAnnulus { rho: 4.0, tau1: 0.2, tau2: 0.8 },
        ] {
            for i in 0..30 {
                let x = 0.1 * i as f64;
                if !p.contains(x) || !p.contains(-x) {
                    continue;
                }
                assert!((p.density(x) - p.density(-x)).abs() <= 1e-10, "{p} x={x}");
            }
        }
    }

    #[test]
    fn sine_limit() {
        assert!((sine_kernel_modulus(0.0) - 1.0 / PI).abs() < 1e-16);
        let diag = circular_cross_section(0.05, 0.0, 1.0, 0.3, 0.3);
        assert!((diag - 1.0 / PI).abs() < 1e-10);
        let pts: Vec<(f64, f64)> = (0..=20).map(|i| (0.1 * i as f64, 0.0)).collect();
        let e05 = sine_limit_error(0.05, 0.0, 1.0, &pts).unwrap();
        let e10 = sine_limit_error(0.1, 0.0, 1.0, &pts).unwrap();
        assert!(e05 <= 0.02 && e05 < e10, "{e05} {e10}");
        assert!(sine_limit_error(0.5, 0.0, 1.0, &pts).is_err());
    }
}
