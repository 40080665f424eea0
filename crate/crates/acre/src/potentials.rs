//! Radial potentials, droplets and boundary-condition modified potentials.
//!
//! A potential is stored as a sum of power terms `α (r^p - 1)` plus a
//! logarithmic term `-2β log r`, so that g(1) = 0 holds by construction and
//! evaluation near r = 1 goes through `expm1`.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::quad;

#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    InducedGinibre { a: f64, b: f64 },
    PowerLog { amplitude: f64, exponent: f64, log_weight: f64 },
    Custom { coefficients: Vec<f64>, log_weight: f64 },
}

impl Family {
    pub fn tag(&self) -> &'static str {
        match self {
            Family::InducedGinibre { .. } => "induced-ginibre",
            Family::PowerLog { .. } => "power-log",
            Family::Custom { .. } => "custom",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadialPotential {
    family: Family,
    /// (coefficient, power) pairs.
    terms: Vec<(f64, f64)>,
    log_weight: f64,
    /// Raw value at r = 1 removed at construction.
    shift: f64,
    /// g'(1).
    slope: f64,
}

impl RadialPotential {
    fn from_terms(family: Family, terms: Vec<(f64, f64)>, log_weight: f64) -> Self {
        let shift = terms.iter().map(|(a, _)| a).sum();
        let slope = terms.iter().map(|(a, p)| a * p).sum::<f64>() - 2.0 * log_weight;
        Self { family, terms, log_weight, shift, slope }
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    /// The constant subtracted from the raw profile to get g(1) = 0.
    pub fn shift(&self) -> f64 {
        self.shift
    }

    pub fn log_weight(&self) -> f64 {
        self.log_weight
    }

    pub fn g(&self, r: f64) -> f64 {
        let l = r.ln();
        let mut v: f64 = self.terms.iter().map(|(a, p)| a * (p * l).exp_m1()).sum();
        if self.log_weight != 0.0 {
            v -= 2.0 * self.log_weight * l;
        }
        v
    }

    /// Σ of the absolute values of the terms summed in `g`; bounds its rounding error.
    pub fn magnitude(&self, r: f64) -> f64 {
        let l = r.ln();
        self.terms.iter().map(|(a, p)| (a * (p * l).exp_m1()).abs()).sum::<f64>()
            + (2.0 * self.log_weight * l).abs()
    }

    pub fn dg(&self, r: f64) -> f64 {
        self.r_dg(r) / r
    }

    /// r g'(r), accurate near r = 1.
    pub fn r_dg(&self, r: f64) -> f64 {
        let l = r.ln();
        self.terms.iter().map(|(a, p)| a * p * (p * l).exp_m1()).sum::<f64>() + self.slope
    }

    pub fn d2g(&self, r: f64) -> f64 {
        self.terms
            .iter()
            .map(|(a, p)| a * p * (p - 1.0) * r.powf(p - 2.0))
            .sum::<f64>()
            + 2.0 * self.log_weight / (r * r)
    }

    pub fn d3g(&self, r: f64) -> f64 {
        self.terms
            .iter()
            .map(|(a, p)| a * p * (p - 1.0) * (p - 2.0) * r.powf(p - 3.0))
            .sum::<f64>()
            - 4.0 * self.log_weight / (r * r * r)
    }

    /// ΔQ = (g'' + g'/r)/4 with Δ the quarter Laplacian.
    pub fn laplacian(&self, r: f64) -> f64 {
        0.25 * self.terms.iter().map(|(a, p)| a * p * p * r.powf(p - 2.0)).sum::<f64>()
    }

    /// d/dr (r g'(r)) = 4 r ΔQ(r).
    fn d_r_dg(&self, r: f64) -> f64 {
        self.terms.iter().map(|(a, p)| a * p * p * r.powf(p - 1.0)).sum()
    }

    /// lim_{r→0} r g'(r).
    fn r_dg_at_zero(&self) -> f64 {
        if self.terms.iter().any(|(a, p)| *p < 0.0 && *a != 0.0) {
            return f64::NEG_INFINITY;
        }
        -2.0 * self.log_weight
    }
}

/// g(r) = a r² − 2b log r − a with a = n/ρ², b = a − 1/2.
pub fn make_induced_ginibre(n: usize, rho: f64) -> Result<RadialPotential> {
    check_n_rho(n, rho)?;
    let a = n as f64 / (rho * rho);
    let b = a - 0.5;
    if b < 0.0 {
        return Err(Error::domain(format!(
            "induced Ginibre needs n ≥ ρ²/2 (log weight b = {b} < 0 for n = {n}, ρ = {rho})"
        )));
    }
    Ok(RadialPotential::from_terms(Family::InducedGinibre { a, b }, vec![(a, 2.0)], b))
}

/// g(r) = A (r^{2λ} − 1) − 2B log r with A = n/(λ²ρ²), B = λA − 1/2.
pub fn make_power_log(n: usize, rho: f64, lambda: f64) -> Result<RadialPotential> {
    check_n_rho(n, rho)?;
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::domain(format!("power-log exponent must be positive, got {lambda}")));
    }
    let amplitude = n as f64 / (lambda * lambda * rho * rho);
    let log_weight = lambda * amplitude - 0.5;
    if log_weight < 0.0 {
        return Err(Error::domain(format!(
            "power-log needs λA ≥ 1/2 (log weight {log_weight} < 0)"
        )));
    }
    let family = Family::PowerLog { amplitude, exponent: lambda, log_weight };
    Ok(RadialPotential::from_terms(family, vec![(amplitude, 2.0 * lambda)], log_weight))
}

/// g(r) = Σ_k α_k r^{2k} − 2β log r (k = 1, 2, ...), shifted so g(1) = 0.
/// No normalisation of g'(1) is imposed.
pub fn make_custom(coefficients: &[f64], beta: f64) -> Result<RadialPotential> {
    if coefficients.is_empty() || coefficients.iter().all(|c| *c == 0.0) {
        return Err(Error::domain("custom potential needs at least one nonzero coefficient"));
    }
    if coefficients.iter().any(|c| !c.is_finite()) || !beta.is_finite() {
        return Err(Error::domain("custom potential coefficients must be finite"));
    }
    let terms = coefficients
        .iter()
        .enumerate()
        .filter(|(_, a)| **a != 0.0)
        .map(|(k, a)| (*a, 2.0 * (k + 1) as f64))
        .collect();
    let family = Family::Custom { coefficients: coefficients.to_vec(), log_weight: beta };
    Ok(RadialPotential::from_terms(family, terms, beta))
}

fn check_n_rho(n: usize, rho: f64) -> Result<()> {
    if n == 0 {
        return Err(Error::domain("n must be at least 1"));
    }
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::domain(format!("ρ must be positive and finite, got {rho}")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryCondition {
    Free,
    /// Confinement parameters; `f64::INFINITY` truncates that side.
    Interpolated { c1: f64, c2: f64 },
    HardAnnulus { tau1: f64, tau2: f64 },
    HardDisk { tau: f64 },
}

impl BoundaryCondition {
    pub fn soft_hard() -> Self {
        BoundaryCondition::Interpolated { c1: f64::INFINITY, c2: f64::INFINITY }
    }

    pub fn check(&self) -> Result<()> {
        match *self {
            BoundaryCondition::Free => Ok(()),
            BoundaryCondition::Interpolated { c1, c2 } => {
                if c1 > 0.0 && c2 > 0.0 {
                    Ok(())
                } else {
                    Err(Error::domain(format!("confinement parameters must be positive, got ({c1}, {c2})")))
                }
            }
            BoundaryCondition::HardAnnulus { tau1, tau2 } => {
                if tau1.is_finite() && tau2.is_finite() && tau1 < tau2 {
                    Ok(())
                } else {
                    Err(Error::domain(format!("hard annulus needs finite τ₁ < τ₂, got ({tau1}, {tau2})")))
                }
            }
            BoundaryCondition::HardDisk { tau } => {
                if tau > 0.0 && tau <= 1.0 {
                    Ok(())
                } else {
                    Err(Error::domain(format!("hard disk needs τ in (0, 1], got {tau}")))
                }
            }
        }
    }
}

fn fmt_c(c: f64) -> String {
    if c.is_infinite() {
        "inf".into()
    } else {
        format!("{c:?}")
    }
}

impl fmt::Display for BoundaryCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            BoundaryCondition::Free => write!(f, "free"),
            BoundaryCondition::Interpolated { c1, c2 } => {
                write!(f, "interpolated(c1={},c2={})", fmt_c(c1), fmt_c(c2))
            }
            BoundaryCondition::HardAnnulus { tau1, tau2 } => {
                write!(f, "hard-annulus(tau1={tau1:?},tau2={tau2:?})")
            }
            BoundaryCondition::HardDisk { tau } => write!(f, "hard-disk(tau={tau:?})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSpec {
    pub n: usize,
    pub rho: f64,
    pub potential: RadialPotential,
    pub bc: BoundaryCondition,
}

impl EnsembleSpec {
    pub fn new(n: usize, rho: f64, potential: RadialPotential, bc: BoundaryCondition) -> Result<Self> {
        check_n_rho(n, rho)?;
        bc.check()?;
        Ok(Self { n, rho, potential, bc })
    }

    pub fn induced_ginibre(n: usize, rho: f64, bc: BoundaryCondition) -> Result<Self> {
        Self::new(n, rho, make_induced_ginibre(n, rho)?, bc)
    }

    /// Canonical text used for hashing and header echoes.
    pub fn canonical(&self) -> String {
        let fam = match self.potential.family() {
            Family::InducedGinibre { .. } => "induced-ginibre".to_string(),
            Family::PowerLog { exponent, .. } => format!("power-log(lambda={exponent:?})"),
            Family::Custom { coefficients, log_weight } => {
                let cs: Vec<String> = coefficients.iter().map(|c| format!("{c:?}")).collect();
                format!("custom(alpha=[{}],beta={log_weight:?})", cs.join(","))
            }
        };
        format!("family={fam};n={};rho={:?};bc={}", self.n, self.rho, self.bc)
    }

    /// SHA-256 of the canonical text, hex encoded.
    pub fn hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let digest = Sha256::digest(self.canonical().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Droplet {
    pub r0: f64,
    pub r1: f64,
    /// sqrt(n / ΔQ(1)).
    pub rho_n: f64,
}

/// Solve r g'(r) = 2τ by bracketed Newton.
pub fn r_tau(spec: &EnsembleSpec, tau: f64) -> Result<f64> {
    solve_r_tau(&spec.potential, tau)
}

fn solve_r_tau(pot: &RadialPotential, tau: f64) -> Result<f64> {
    let target = 2.0 * tau;
    let equation = || format!("r·g'(r) = {target}");
    if !target.is_finite() {
        return Err(Error::domain(format!("τ must be finite, got {tau}")));
    }
    let f = |r: f64| pot.r_dg(r) - target;
    let floor = pot.r_dg_at_zero();
    if target < floor {
        return Err(Error::domain(format!(
            "τ = {tau} below the range of r·g'(r)/2 (infimum {})",
            floor / 2.0
        )));
    }
    if target == floor {
        return Ok(0.0);
    }
    let mut lo = 0.5;
    let mut guard = 0;
    while f(lo) >= 0.0 {
        lo *= 0.5;
        guard += 1;
        if guard > 1100 || lo == 0.0 {
            return Err(Error::Solver { equation: equation(), reason: "no sign change towards r → 0".into() });
        }
    }
    let mut hi = 2.0;
    guard = 0;
    while f(hi) <= 0.0 {
        hi *= 2.0;
        guard += 1;
        if guard > 1000 || !hi.is_finite() {
            return Err(Error::Solver { equation: equation(), reason: "no sign change towards r → ∞".into() });
        }
    }
    let mut r = 0.5 * (lo + hi);
    for _ in 0..200 {
        let fr = f(r);
        if fr == 0.0 {
            return Ok(r);
        }
        if fr < 0.0 {
            lo = r;
        } else {
            hi = r;
        }
        let d = pot.d_r_dg(r);
        let mut next = r - fr / d;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        if (next - r).abs() <= 1e-15 * r || hi - lo <= 1e-15 * hi {
            return Ok(next);
        }
        r = next;
    }
    Err(Error::Solver { equation: equation(), reason: "no convergence in 200 iterations".into() })
}

pub fn droplet_radii(spec: &EnsembleSpec) -> Result<Droplet> {
    let r0 = solve_r_tau(&spec.potential, 0.0)?;
    let r1 = solve_r_tau(&spec.potential, 1.0)?;
    let rho_n = (spec.n as f64 / spec.potential.laplacian(1.0)).sqrt();
    Ok(Droplet { r0, r1, rho_n })
}

/// An ensemble with its droplet and integration domain resolved.
#[derive(Debug, Clone)]
pub struct Ensemble {
    pub spec: EnsembleSpec,
    pub droplet: Droplet,
    /// Radii outside [lo, hi] carry zero weight.
    pub domain: (f64, f64),
}

impl Ensemble {
    pub fn new(spec: EnsembleSpec) -> Result<Self> {
        let droplet = droplet_radii(&spec)?;
        let domain = match spec.bc {
            BoundaryCondition::Free => (0.0, f64::INFINITY),
            BoundaryCondition::Interpolated { c1, c2 } => (
                if c1.is_infinite() { droplet.r0 } else { 0.0 },
                if c2.is_infinite() { droplet.r1 } else { f64::INFINITY },
            ),
            BoundaryCondition::HardAnnulus { tau1, tau2 } => {
                (r_tau(&spec, tau1)?, r_tau(&spec, tau2)?)
            }
            BoundaryCondition::HardDisk { tau } => (0.0, r_tau(&spec, tau)?),
        };
        if !(domain.0 < domain.1) {
            return Err(Error::domain(format!("empty integration domain [{}, {}]", domain.0, domain.1)));
        }
        Ok(Self { spec, droplet, domain })
    }

    pub fn n(&self) -> usize {
        self.spec.n
    }

    pub fn rho(&self) -> f64 {
        self.spec.rho
    }

    pub fn potential(&self) -> &RadialPotential {
        &self.spec.potential
    }

    pub fn r_tau(&self, tau: f64) -> Result<f64> {
        r_tau(&self.spec, tau)
    }

    pub fn in_domain(&self, r: f64) -> bool {
        r >= self.domain.0 && r <= self.domain.1
    }

    /// Breakpoints where the effective potential loses smoothness.
    pub fn kinks(&self) -> Vec<f64> {
        match self.spec.bc {
            BoundaryCondition::Interpolated { c1, c2 } => {
                let mut v = Vec::new();
                if c1.is_finite() && c1 != 1.0 && self.droplet.r0 > 0.0 {
                    v.push(self.droplet.r0);
                }
                if c2.is_finite() && c2 != 1.0 {
                    v.push(self.droplet.r1);
                }
                v
            }
            _ => Vec::new(),
        }
    }

    /// (c, side value) blend at radius r: r·Q_eff' = c·r g' + (1 − c)·side.
    fn blend(&self, r: f64) -> Option<(f64, f64)> {
        match self.spec.bc {
            BoundaryCondition::Interpolated { c1, .. } if r < self.droplet.r0 => Some((c1, 0.0)),
            BoundaryCondition::Interpolated { c2, .. } if r > self.droplet.r1 => Some((c2, 2.0)),
            _ => None,
        }
    }

    /// r·Q_eff'(r) inside the domain.
    pub fn r_dq_eff(&self, r: f64) -> f64 {
        let rdg = self.potential().r_dg(r);
        match self.blend(r) {
            Some((c, side)) => c * rdg + (1.0 - c) * side,
            None => rdg,
        }
    }

    /// Q_eff''(r) inside the domain.
    pub fn d2q_eff(&self, r: f64) -> f64 {
        let d2 = self.potential().d2g(r);
        match self.blend(r) {
            Some((c, side)) => c * d2 - (1.0 - c) * side / (r * r),
            None => d2,
        }
    }
}

/// Obstacle function: the largest subharmonic minorant with logarithmic growth.
pub fn obstacle(ens: &Ensemble, r: f64) -> f64 {
    let Droplet { r0, r1, .. } = ens.droplet;
    let pot = ens.potential();
    if r < r0 {
        pot.g(r0)
    } else if r <= r1 {
        pot.g(r)
    } else {
        2.0 * (r / r1).ln() + pot.g(r1)
    }
}

/// Potential after the boundary condition is applied; +∞ marks zero weight.
pub fn effective_potential(ens: &Ensemble, r: f64) -> f64 {
    if !ens.in_domain(r) {
        return f64::INFINITY;
    }
    let q = ens.potential().g(r);
    match ens.spec.bc {
        BoundaryCondition::Interpolated { c1, c2 } => {
            let Droplet { r0, r1, .. } = ens.droplet;
            let c = if r < r0 {
                c1
            } else if r > r1 {
                c2
            } else {
                return q;
            };
            q - (1.0 - c) * (q - obstacle(ens, r))
        }
        _ => q,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumDensity {
    /// ΔQ(r) on the absolutely continuous support, else 0.
    pub density: f64,
    pub support: (f64, f64),
    /// Mass on the inner and outer wall circles.
    pub inner_mass: f64,
    pub outer_mass: f64,
    pub note: Option<String>,
}

pub fn equilibrium_density(ens: &Ensemble, r: f64) -> Result<EquilibriumDensity> {
    let Droplet { r0, r1, .. } = ens.droplet;
    let (support, inner_mass, outer_mass, note) = match ens.spec.bc {
        BoundaryCondition::Free => ((r0, r1), 0.0, 0.0, None),
        BoundaryCondition::Interpolated { c1, c2 } => {
            let note = if c1 == 1.0 && c2 == 1.0 {
                None
            } else {
                Some("interpolated confinement leaves the equilibrium measure of the free case".into())
            };
            ((r0, r1), 0.0, 0.0, note)
        }
        BoundaryCondition::HardAnnulus { tau1, tau2 } => {
            let ta = tau1.max(0.0);
            let tb = tau2.min(1.0);
            if ta >= tb {
                return Err(Error::domain(format!("hard annulus ({tau1}, {tau2}) misses the droplet")));
            }
            ((ens.r_tau(ta)?, ens.r_tau(tb)?), ta, 1.0 - tb, None)
        }
        BoundaryCondition::HardDisk { tau } => ((r0, ens.r_tau(tau)?), 0.0, 1.0 - tau, None),
    };
    let density = if r >= support.0 && r <= support.1 { ens.potential().laplacian(r) } else { 0.0 };
    Ok(EquilibriumDensity { density, support, inner_mass, outer_mass, note })
}

/// Absolutely continuous mass by quadrature plus wall masses.
pub fn equilibrium_total_mass(ens: &Ensemble) -> Result<f64> {
    let eq = equilibrium_density(ens, 1.0)?;
    let pot = ens.potential();
    let f = |r: f64| 2.0 * r * pot.laplacian(r);
    let ac = quad::adaptive(&f, eq.support.0, eq.support.1, 1e-15, 1e-14);
    Ok(ac + eq.inner_mass + eq.outer_mass)
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub subharmonic_min: f64,
    pub subharmonic_ok: bool,
    pub g_at_one: f64,
    pub g_at_one_ok: bool,
    pub slope_defect: f64,
    pub slope_ok: bool,
    pub monotone_ok: bool,
    /// max |g'''| / n on the droplet; reported, only non-finiteness fails.
    pub third_derivative_ratio: f64,
    pub third_derivative_ok: bool,
    /// g(R)/(2 log R) sampled at a large radius.
    pub growth_ratio: f64,
    pub growth_ok: bool,
    pub rho_declared: f64,
    pub rho_estimated: f64,
    pub rho_ok: bool,
    pub droplet: Option<Droplet>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.subharmonic_ok
            && self.g_at_one_ok
            && self.slope_ok
            && self.monotone_ok
            && self.third_derivative_ok
            && self.growth_ok
            && self.rho_ok
    }
}

pub fn validate(spec: &EnsembleSpec) -> ValidationReport {
    let pot = &spec.potential;
    let droplet = droplet_radii(spec).ok();
    let (lo, hi) = match droplet {
        Some(d) if d.r0 > 0.0 => (d.r0 / 2.0, 2.0 * d.r1),
        Some(d) => (1e-3 * d.r1, 2.0 * d.r1),
        None => (0.5, 2.0),
    };
    let m = 512;
    let grid: Vec<f64> = (0..m)
        .map(|i| (lo.ln() + (hi / lo).ln() * i as f64 / (m - 1) as f64).exp())
        .collect();
    let subharmonic_min = grid.iter().map(|&r| pot.laplacian(r)).fold(f64::INFINITY, f64::min);
    let monotone_ok = grid.windows(2).all(|w| pot.r_dg(w[1]) > pot.r_dg(w[0]));
    let (a, b) = droplet.map(|d| (d.r0.max(lo), d.r1)).unwrap_or((lo, hi));
    let third = (0..=64)
        .map(|i| pot.d3g(a + (b - a) * i as f64 / 64.0).abs())
        .fold(0.0, f64::max)
        / spec.n as f64;
    let big = 1e3 * hi.max(1.0);
    let growth_ratio = pot.g(big) / (2.0 * big.ln());
    let g_at_one = pot.g(1.0);
    let slope_defect = pot.dg(1.0) - 1.0;
    let rho_estimated = (spec.n as f64 / pot.laplacian(1.0)).sqrt();
    ValidationReport {
        subharmonic_min,
        subharmonic_ok: subharmonic_min >= 0.0,
        g_at_one,
        g_at_one_ok: g_at_one.abs() <= 1e-12,
        slope_defect,
        slope_ok: slope_defect.abs() <= 1e-12,
        monotone_ok,
        third_derivative_ratio: third,
        third_derivative_ok: third.is_finite(),
        growth_ratio,
        growth_ok: growth_ratio > 1.0,
        rho_declared: spec.rho,
        rho_estimated,
        rho_ok: rho_estimated.is_finite() && ((rho_estimated - spec.rho) / spec.rho).abs() <= 1e-10,
        droplet,
    }
}
