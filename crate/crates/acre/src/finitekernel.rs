//! Finite-n correlation kernel and rescaled correlation functions.
//!
//! Area measure is d²ζ/π throughout, so ‖ζʲ‖² is the radial integral kept in
//! the norm table and ∫ K(ζ, ζ) dA = n.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::limits::LimitProfile;
use crate::potentials::{effective_potential, BoundaryCondition, Ensemble};
use crate::radialnorms::NormTable;

/// Terms this far below the largest one are dropped.
const DROP: f64 = 40.0;

/// Largest supported k for k-point functions.
pub const MAX_POINTS: usize = 8;

/// Where and how the ensemble is magnified.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Zoom {
    /// α = 1, γ = √(nΔQ(1)).
    Unit,
    /// α = r_τ at the outer hard wall, γ = √(nΔQ(1)).
    OuterWall,
    /// α = r_τ, γ the inverse of the mean spacing solved at the wall.
    WallSpacing,
}

#[derive(Debug, Clone)]
pub struct KernelContext {
    ens: Ensemble,
    table: NormTable,
    zoom: Zoom,
    alpha: f64,
    gamma: f64,
}

/// Positive root of ΔQ(r_τ)s² + ((1−τ)/r_τ)s = 1/n, the mean spacing at the wall.
pub fn wall_spacing(ens: &Ensemble, tau: f64) -> Result<f64> {
    let r = ens.r_tau(tau)?;
    let a = ens.potential().laplacian(r);
    let b = (1.0 - tau) / r;
    let c = -1.0 / ens.n() as f64;
    if a <= 0.0 {
        return Err(Error::domain("spacing equation needs ΔQ > 0 at the wall"));
    }
    // stable form of (−b + √(b² − 4ac)) / 2a
    Ok(-2.0 * c / (b + (b * b - 4.0 * a * c).sqrt()))
}

impl KernelContext {
    /// Default zoom: the wall spacing for a hard disk, the unit circle otherwise.
    pub fn new(ens: Ensemble, table: NormTable) -> Result<Self> {
        let zoom = match ens.spec.bc {
            BoundaryCondition::HardDisk { .. } => Zoom::WallSpacing,
            _ => Zoom::Unit,
        };
        Self::with_zoom(ens, table, zoom)
    }

    pub fn with_zoom(ens: Ensemble, table: NormTable, zoom: Zoom) -> Result<Self> {
        if table.n != ens.n() || table.spec_hash != ens.spec.hash() {
            return Err(Error::Consistency("norm table belongs to a different ensemble".into()));
        }
        let n = ens.n() as f64;
        let unit_gamma = (n * ens.potential().laplacian(1.0)).sqrt();
        let (alpha, gamma) = match (zoom, ens.spec.bc) {
            (Zoom::Unit, _) => (1.0, unit_gamma),
            (Zoom::OuterWall, BoundaryCondition::HardDisk { tau }) => (ens.r_tau(tau)?, unit_gamma),
            (Zoom::WallSpacing, BoundaryCondition::HardDisk { tau }) => {
                (ens.r_tau(tau)?, 1.0 / wall_spacing(&ens, tau)?)
            }
            _ => return Err(Error::Unsupported("wall zoom needs a hard-disk boundary".into())),
        };
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::Consistency(format!("rescale factor {gamma} is not positive")));
        }
        Ok(Self { ens, table, zoom, alpha, gamma })
    }

    pub fn ensemble(&self) -> &Ensemble {
        &self.ens
    }

    pub fn table(&self) -> &NormTable {
        &self.table
    }

    pub fn zoom(&self) -> Zoom {
        self.zoom
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Limiting profile matching this zoom.
    pub fn limit(&self) -> LimitProfile {
        match (self.zoom, self.ens.spec.bc) {
            (Zoom::OuterWall, BoundaryCondition::HardDisk { tau }) => {
                LimitProfile::HardDiskOuter { rho: self.ens.rho(), tau }
            }
            _ => LimitProfile::for_spec(&self.ens.spec),
        }
    }

    /// ζ = α + z/γ.
    pub fn unscale(&self, z: Complex64) -> Complex64 {
        z / self.gamma + self.alpha
    }

    /// ln|ζ|^{2j}e^{-nQ}/‖ζʲ‖² terms for the diagonal at modulus r.
    fn diag_terms(&self, r: f64) -> Option<Vec<f64>> {
        let q = effective_potential(&self.ens, r);
        if q == f64::INFINITY {
            return None;
        }
        let n = self.ens.n() as f64;
        let lr = r.ln();
        Some(
            self.table
                .log_norm
                .iter()
                .enumerate()
                .map(|(j, ln)| if j == 0 { -n * q - ln } else { 2.0 * j as f64 * lr - n * q - ln })
                .collect(),
        )
    }

    /// K(ζ, ζ) as a function of |ζ|.
    pub fn diagonal(&self, r: f64) -> f64 {
        let Some(t) = self.diag_terms(r) else {
            return 0.0;
        };
        let top = t.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let s: f64 = t.iter().filter(|&&v| v >= top - DROP).map(|v| (v - top).exp()).sum();
        top.exp() * s
    }

    /// K(ζ, η) by log-magnitude summation with exact phases jθ.
    pub fn kernel(&self, zeta: Complex64, eta: Complex64) -> Complex64 {
        let (rz, rw) = (zeta.norm(), eta.norm());
        let qz = effective_potential(&self.ens, rz);
        let qw = effective_potential(&self.ens, rw);
        if qz == f64::INFINITY || qw == f64::INFINITY {
            return Complex64::new(0.0, 0.0);
        }
        let n = self.ens.n() as f64;
        let base = -0.5 * n * (qz + qw);
        let lr = rz.ln() + rw.ln();
        let theta = zeta.arg() - eta.arg();
        let t: Vec<f64> = self
            .table
            .log_norm
            .iter()
            .enumerate()
            .map(|(j, ln)| if j == 0 { base - ln } else { j as f64 * lr + base - ln })
            .collect();
        let top = t.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if top == f64::NEG_INFINITY {
            return Complex64::new(0.0, 0.0);
        }
        let mut s = Complex64::new(0.0, 0.0);
        for (j, v) in t.iter().enumerate() {
            if *v >= top - DROP {
                s += Complex64::from_polar((v - top).exp(), j as f64 * theta);
            }
        }
        s * top.exp()
    }

    /// γ⁻² K(ζ, ζ) at ζ = α + z/γ.
    pub fn rho1(&self, z: Complex64) -> f64 {
        self.diagonal(self.unscale(z).norm()) / (self.gamma * self.gamma)
    }

    /// det[γ⁻² K(ζ_i, ζ_j)] for k ≤ 8 points.
    pub fn rhok(&self, zs: &[Complex64]) -> Result<f64> {
        let k = zs.len();
        if k > self.ens.n() {
            return Err(Error::domain(format!("k = {k} exceeds n = {}", self.ens.n())));
        }
        if k > MAX_POINTS {
            return Err(Error::Unsupported(format!("k-point functions are capped at k = {MAX_POINTS}")));
        }
        let pts: Vec<Complex64> = zs.iter().map(|z| self.unscale(*z)).collect();
        let g2 = self.gamma * self.gamma;
        let mut m: Vec<Vec<Complex64>> =
            pts.iter().map(|a| pts.iter().map(|b| self.kernel(*a, *b) / g2).collect()).collect();
        Ok(determinant(&mut m).re)
    }

    /// rho1 along the real axis.
    pub fn profile(&self, xs: &[f64]) -> Vec<f64> {
        xs.par_iter().map(|&x| self.rho1(Complex64::new(x, 0.0))).collect()
    }

    /// sup over the grid of |R_n − R_limit|, skipping points closer than
    /// `wall_margin` to a hard wall of the limit, where the finite-n wall
    /// sits O(1/n) away and the difference is a jump.
    pub fn sup_error(&self, xs: &[f64], wall_margin: f64) -> f64 {
        let limit = self.limit();
        let (lo, hi) = limit.support();
        let xs: Vec<f64> =
            xs.iter().copied().filter(|&x| x - lo >= wall_margin && hi - x >= wall_margin).collect();
        let xs = xs.as_slice();
        let fin = self.profile(xs);
        let lim: Vec<f64> = xs.par_iter().map(|&x| limit.density(x)).collect();
        fin.iter().zip(&lim).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

/// Determinant by LU with partial pivoting; the matrix is overwritten.
pub fn determinant(m: &mut [Vec<Complex64>]) -> Complex64 {
    let k = m.len();
    let mut det = Complex64::new(1.0, 0.0);
    for c in 0..k {
        let p = (c..k).max_by(|&a, &b| m[a][c].norm().total_cmp(&m[b][c].norm())).unwrap_or(c);
        if m[p][c].norm() == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        if p != c {
            m.swap(p, c);
            det = -det;
        }
        let pivot = m[c][c];
        det *= pivot;
        for r in c + 1..k {
            let f = m[r][c] / pivot;
            if f == Complex64::new(0.0, 0.0) {
                continue;
            }
            for col in c..k {
                let v = m[c][col];
                m[r][col] -= f * v;
            }
        }
    }
    det
}

pub fn kernel_n(ctx: &KernelContext, zeta: Complex64, eta: Complex64) -> Complex64 {
    ctx.kernel(zeta, eta)
}

pub fn rho1_rescaled(ctx: &KernelContext, z: Complex64) -> f64 {
    ctx.rho1(z)
}

pub fn rhok_rescaled(ctx: &KernelContext, zs: &[Complex64]) -> Result<f64> {
    ctx.rhok(zs)
}

pub fn profile(ctx: &KernelContext, xs: &[f64]) -> Vec<f64> {
    ctx.profile(xs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::{make_custom, EnsembleSpec};
    use crate::quad::{adaptive, rule};
    use crate::radialnorms::norm_table;

    fn ctx(n: usize, rho: f64, bc: BoundaryCondition) -> KernelContext {
        let ens = Ensemble::new(EnsembleSpec::induced_ginibre(n, rho, bc).unwrap()).unwrap();
        let t = norm_table(&ens).unwrap();
        KernelContext::new(ens, t).unwrap()
    }

    fn gaussian_ctx(n: usize) -> KernelContext {
        let pot = make_custom(&[1.0], 0.0).unwrap();
        let ens = Ensemble::new(EnsembleSpec::new(n, 1.0, pot, BoundaryCondition::Free).unwrap()).unwrap();
        let t = norm_table(&ens).unwrap();
        KernelContext::new(ens, t).unwrap()
    }

    #[test]
    fn single_particle_gaussian() {
        // Q = r² − 1 after the shift; K(0,0) = e^{n}/‖1‖² with ‖1‖² = e^{n}/n
        let c = gaussian_ctx(1);
        let k = c.kernel(Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
        assert!((k.re - 1.0).abs() < 1e-12 && k.im == 0.0);
    }

    #[test]
    fn unit_gamma_is_n_over_rho() {
        let c = ctx(256, 2.0, BoundaryCondition::Free);
        assert!((c.gamma() - 128.0).abs() < 1e-12);
        assert_eq!(c.alpha(), 1.0);
    }

    #[test]
    fn hermitian_and_positive() {
        let c = ctx(64, 2.0, BoundaryCondition::Free);
        let a = Complex64::from_polar(1.01, 0.3);
        let b = Complex64::from_polar(0.98, -1.2);
        let k1 = c.kernel(a, b);
        let k2 = c.kernel(b, a).conj();
        assert!((k1 - k2).norm() <= 1e-12 * k1.norm());
        for i in 0..100 {
            let z = Complex64::from_polar(0.95 + 0.001 * i as f64, 0.37 * i as f64);
            assert!(c.kernel(z, z).re > 0.0);
        }
    }

    #[test]
    fn diagonal_matches_kernel() {
        let c = ctx(128, 2.0, BoundaryCondition::Free);
        let z = Complex64::from_polar(1.003, 2.1);
        let k = c.kernel(z, z);
        assert!((k.re - c.diagonal(z.norm())).abs() <= 1e-12 * k.re);
    }

    #[test]
    fn reproducing_property() {
        let c = ctx(8, 2.0, BoundaryCondition::Free);
        let z = Complex64::from_polar(0.9, 0.4);
        let x = Complex64::from_polar(1.1, -0.8);
        let g = rule(64);
        let (r0, r1) = (0.0, 3.0);
        let m = 64;
        let mut acc = Complex64::new(0.0, 0.0);
        for (t, w) in g.nodes.iter().zip(&g.weights) {
            let r = 0.5 * (r1 - r0) * (t + 1.0) + r0;
            let wr = 0.5 * (r1 - r0) * w;
            for k in 0..m {
                let th = 2.0 * std::f64::consts::PI * k as f64 / m as f64;
                let eta = Complex64::from_polar(r, th);
                acc += c.kernel(z, eta) * c.kernel(eta, x) * (wr * r * 2.0 / m as f64);
            }
        }
        let want = c.kernel(z, x);
        assert!((acc - want).norm() <= 1e-3 * want.norm(), "{acc} {want}");
    }

    #[test]
    fn diagonal_integrates_to_n() {
        let c = ctx(256, 2.0, BoundaryCondition::Free);
        let f = |r: f64| 2.0 * r * c.diagonal(r);
        let mut total = 0.0;
        let mut a = 0.0;
        for b in [0.9, 0.98, 1.0, 1.02, 1.1, 2.0] {
            total += adaptive(&f, a, b, 1e-12, 1e-13);
            a = b;
        }
        assert!((total - 256.0).abs() <= 1e-6 * 256.0, "{total}");
    }

    #[test]
    fn rho1_properties() {
        let c = ctx(1024, 4.0, BoundaryCondition::Free);
        let v = c.rho1(Complex64::new(0.0, 0.0));
        assert!((v - 0.954_499_736_103_641_6).abs() <= 0.02, "{v}");
        let z = Complex64::new(0.7, 1.3);
        assert_eq!(c.rho1(z).to_bits(), c.rho1(z.conj()).to_bits());

        let hard = ctx(256, 4.0, BoundaryCondition::soft_hard());
        assert_eq!(hard.rho1(Complex64::new(2.0, 0.0)), 0.0);
    }

    #[test]
    fn k_point_functions() {
        let c = ctx(256, 4.0, BoundaryCondition::Free);
        let z1 = Complex64::new(0.2, 0.0);
        let z2 = Complex64::new(-0.3, 10.0);
        assert!((c.rhok(&[z1]).unwrap() - c.rho1(z1)).abs() <= 1e-12);
        assert!(c.rhok(&[z1, z1]).unwrap().abs() <= 1e-12);
        let wide = ctx(2048, 40.0, BoundaryCondition::Free);
        let far = wide.rhok(&[z1, z2]).unwrap();
        let prod = wide.rho1(z1) * wide.rho1(z2);
        assert!((far - prod).abs() <= 1e-4 * prod);
        let swapped = wide.rhok(&[z2, z1]).unwrap();
        assert!((far - swapped).abs() <= 1e-12 * prod);
        let many: Vec<Complex64> = (0..9).map(|i| Complex64::new(0.0, i as f64)).collect();
        assert!(c.rhok(&many).is_err());
        let tiny = gaussian_ctx(1);
        assert!(tiny.rhok(&[z1, z2]).is_err());
    }

    #[test]
    fn gram_matrix_is_positive_semidefinite() {
        let c = ctx(128, 2.0, BoundaryCondition::Free);
        let pts: Vec<Complex64> = (0..8).map(|i| c.unscale(Complex64::new(0.3 * i as f64 - 1.0, 0.7 * i as f64))).collect();
        let m: Vec<Vec<Complex64>> = pts.iter().map(|a| pts.iter().map(|b| c.kernel(*a, *b)).collect()).collect();
        let trace: f64 = (0..8).map(|i| m[i][i].re).sum();
        assert!(cholesky_ok(&m, 1e-10 * trace));
    }

    fn cholesky_ok(m: &[Vec<Complex64>], shift: f64) -> bool {
        let k = m.len();
        let mut l = vec![vec![Complex64::new(0.0, 0.0); k]; k];
        for i in 0..k {
            for j in 0..=i {
                let mut s = m[i][j];
                if i == j {
                    s += shift;
                }
                for p in 0..j {
                    s -= l[i][p] * l[j][p].conj();
                }
                if i == j {
                    if s.re <= 0.0 {
                        return false;
                    }
                    l[i][i] = Complex64::new(s.re.sqrt(), 0.0);
                } else {
                    l[i][j] = s / l[j][j];
                }
            }
        }
        true
    }

    #[test]
    fn profile_matches_pointwise_and_is_nearly_even() {
        let c = ctx(1024, 4.0, BoundaryCondition::Free);
        assert_eq!(c.profile(&[0.0])[0], c.rho1(Complex64::new(0.0, 0.0)));
        let xs: Vec<f64> = (0..=20).map(|i| 0.1 * i as f64).collect();
        let neg: Vec<f64> = xs.iter().map(|x| -x).collect();
        for (a, b) in c.profile(&xs).iter().zip(c.profile(&neg)) {
            assert!((a - b).abs() <= 0.05);
        }
    }

    #[test]
    fn soft_hard_profile_vanishes_off_strip() {
        let c = ctx(1024, 4.0, BoundaryCondition::soft_hard());
        for x in [-2.0, 2.0] {
            assert!(c.profile(&[x])[0] <= 1e-8);
        }
    }

    #[test]
    fn wall_spacing_matches_c_of_tau() {
        let ens = Ensemble::new(EnsembleSpec::induced_ginibre(4096, 2.0, BoundaryCondition::HardDisk { tau: 0.5 }).unwrap())
            .unwrap();
        let s = wall_spacing(&ens, 0.5).unwrap();
        let c = crate::limits::c_of_tau(0.5, 2.0);
        assert!((4096.0 * s - c).abs() <= 0.05);
    }
}
