//! Log orthogonal norms of the monomials ζʲ under the effective weight.
//!
//! Every integral here is ∫ 2r^{2j+1} e^{-nQ_eff(r)} dr over part of the
//! domain. The integrand spans thousands of orders of magnitude at large n,
//! so panels are integrated relative to the value at the degree's peak and
//! all accumulation happens in log space.

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::limits;
use crate::potentials::{effective_potential, BoundaryCondition, Ensemble, EnsembleSpec};
use crate::quad::rule;
use crate::special::{ln_add_exp, ln_gauss_mass};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    /// Half width of the core region in units of the local scale.
    pub core_half_width: f64,
    /// Core panel width in units of the local scale.
    pub panel_width: f64,
    /// Tail panels stop once their log mass falls this far below the peak mass.
    pub cutoff: f64,
    /// Refinement level: 0 is the default rule pair, 1 doubles the node count.
    pub refine: u8,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self { core_half_width: 12.0, panel_width: 1.0, cutoff: 40.0, refine: 0 }
    }
}

impl QuadOptions {
    /// Twice the nodes per unit length.
    pub fn finer(self) -> Self {
        Self { panel_width: 0.5 * self.panel_width, refine: self.refine + 1, ..self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Panel {
    pub a: f64,
    pub b: f64,
    pub ln_mass: f64,
}

/// v_{n,j}(r) = g(r) − 2(j/n) log r.
pub fn v_nj(spec: &EnsembleSpec, j: usize, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::domain(format!("v_nj needs r > 0, got {r}")));
    }
    let tau = j as f64 / spec.n as f64;
    Ok(spec.potential.g(r) - 2.0 * tau * r.ln())
}

/// The radial weight of one degree with its peak located.
#[derive(Debug, Clone)]
pub struct DegreeWeight<'a> {
    ens: &'a Ensemble,
    j: usize,
    peak: f64,
    scale: f64,
    h_peak: f64,
    /// Relative rounding noise of e^{h − h_peak}, from cancellation in h.
    noise: f64,
}

impl<'a> DegreeWeight<'a> {
    pub fn new(ens: &'a Ensemble, j: usize) -> Result<Self> {
        if j > ens.n() {
            return Err(Error::domain(format!("degree {j} exceeds n = {}", ens.n())));
        }
        let (peak, scale) = locate_peak(ens, j);
        Ok(Self::with_peak(ens, j, peak, scale))
    }

    fn with_peak(ens: &'a Ensemble, j: usize, peak: f64, scale: f64) -> Self {
        let mut w = Self { ens, j, peak, scale, h_peak: 0.0, noise: 0.0 };
        w.h_peak = w.h(peak);
        let magnitude = if peak > 0.0 {
            ens.n() as f64 * ens.potential().magnitude(peak) + (2 * j + 1) as f64 * peak.ln().abs()
        } else {
            0.0
        };
        w.noise = 16.0 * f64::EPSILON * (1.0 + magnitude);
        w
    }

    pub fn peak(&self) -> f64 {
        self.peak
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn ln_peak_value(&self) -> f64 {
        self.h_peak
    }

    /// ln of the integrand 2 r^{2j+1} e^{-nQ_eff(r)}.
    pub fn h(&self, r: f64) -> f64 {
        if !(r > 0.0) {
            return f64::NEG_INFINITY;
        }
        let q = effective_potential(self.ens, r);
        if q == f64::INFINITY {
            return f64::NEG_INFINITY;
        }
        std::f64::consts::LN_2 + (2 * self.j + 1) as f64 * r.ln() - self.ens.n() as f64 * q
    }

    fn ln_rule(&self, a: f64, b: f64, order: usize) -> f64 {
        let g = rule(order);
        let c = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        let mut s = 0.0;
        for (x, w) in g.nodes.iter().zip(&g.weights) {
            s += w * (self.h(c + half * x) - self.h_peak).exp();
        }
        (s * half).ln()
    }

    fn ln_panel(&self, a: f64, b: f64, opts: &QuadOptions, depth: u32) -> f64 {
        let narrow = b - a <= 0.25 * self.scale;
        let base = if narrow { 8 } else { 16 };
        let hi_order = base << opts.refine;
        let lo_order = hi_order / 2;
        let fine = self.ln_rule(a, b, hi_order);
        let coarse = self.ln_rule(a, b, lo_order);
        let err = (fine.exp() - coarse.exp()).abs();
        if err <= (1e-15 * self.scale).max(1e-14f64.max(self.noise) * fine.exp()) || depth >= 24 || fine == f64::NEG_INFINITY {
            return self.h_peak + fine;
        }
        let m = 0.5 * (a + b);
        ln_add_exp(self.ln_panel(a, m, opts, depth + 1), self.ln_panel(m, b, opts, depth + 1))
    }

    /// Integrate [a, b], splitting at any sorted break inside it.
    fn segment(&self, a: f64, b: f64, breaks: &[f64], opts: &QuadOptions, out: &mut Vec<Panel>) -> f64 {
        let mut total = f64::NEG_INFINITY;
        let mut left = a;
        let start = breaks.partition_point(|&x| x <= a);
        for &x in &breaks[start..] {
            if x >= b {
                break;
            }
            let m = self.ln_panel(left, x, opts, 0);
            out.push(Panel { a: left, b: x, ln_mass: m });
            total = ln_add_exp(total, m);
            left = x;
        }
        let m = self.ln_panel(left, b, opts, 0);
        out.push(Panel { a: left, b, ln_mass: m });
        ln_add_exp(total, m)
    }

    /// Panels covering the effective support in increasing order; `extra`
    /// (sorted) radii become panel boundaries when they fall inside it.
    pub fn panels(&self, opts: &QuadOptions, extra: &[f64]) -> Vec<Panel> {
        let (lo, hi) = self.ens.domain;
        let mut breaks: Vec<f64> = self
            .ens
            .kinks()
            .into_iter()
            .chain(extra.iter().copied())
            .filter(|&x| x > lo && x < hi)
            .collect();
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();

        let s = self.scale;
        let w = s * opts.panel_width;
        let core_lo = lo.max(self.peak - opts.core_half_width * s);
        let core_hi = hi.min(self.peak + opts.core_half_width * s);
        let mut cuts = vec![core_lo];
        let k_lo = ((core_lo - self.peak) / w).floor() as i64 + 1;
        let k_hi = ((core_hi - self.peak) / w).ceil() as i64 - 1;
        for k in k_lo..=k_hi {
            let x = self.peak + k as f64 * w;
            if x > core_lo && x < core_hi {
                cuts.push(x);
            }
        }
        cuts.push(core_hi);

        let mut core = Vec::new();
        for c in cuts.windows(2) {
            self.segment(c[0], c[1], &breaks, opts, &mut core);
        }
        let floor = self.h_peak + s.ln() - opts.cutoff;

        let mut upper = Vec::new();
        let mut x = core_hi;
        let mut step = s;
        while x < hi {
            let b = if hi.is_finite() { (x + step).min(hi) } else { x + step };
            let m = self.segment(x, b, &breaks, opts, &mut upper);
            if m < floor && self.h(b) < self.h(x) {
                break;
            }
            x = b;
            step *= 2.0;
        }

        let mut lower = Vec::new();
        let mut x = core_lo;
        let mut step = s;
        while x > lo {
            let a = (x - step).max(lo);
            let mut seg = Vec::new();
            let m = self.segment(a, x, &breaks, opts, &mut seg);
            lower.extend(seg.into_iter().rev());
            if m < floor && self.h(a) < self.h(x) {
                break;
            }
            x = a;
            step *= 2.0;
        }
        lower.reverse();
        lower.extend(core);
        lower.extend(upper);
        lower
    }

    pub fn ln_norm(&self, opts: &QuadOptions) -> f64 {
        self.panels(opts, &[]).iter().fold(f64::NEG_INFINITY, |acc, p| ln_add_exp(acc, p.ln_mass))
    }

    /// ln of the mass below and above each sorted radius.
    pub fn partial_masses(&self, radii: &[f64], opts: &QuadOptions) -> Vec<(f64, f64)> {
        let panels = self.panels(opts, radii);
        let m = panels.len();
        let mut prefix = vec![f64::NEG_INFINITY; m + 1];
        for (i, p) in panels.iter().enumerate() {
            prefix[i + 1] = ln_add_exp(prefix[i], p.ln_mass);
        }
        let mut suffix = vec![f64::NEG_INFINITY; m + 1];
        for i in (0..m).rev() {
            suffix[i] = ln_add_exp(suffix[i + 1], panels[i].ln_mass);
        }
        let first = panels.first().map_or(f64::INFINITY, |p| p.a);
        let last = panels.last().map_or(f64::NEG_INFINITY, |p| p.b);
        radii
            .iter()
            .map(|&r| {
                if r <= first {
                    (f64::NEG_INFINITY, suffix[0])
                } else if r >= last {
                    (prefix[m], f64::NEG_INFINITY)
                } else {
                    // r is a panel boundary: count panels ending at or before r
                    let k = panels.partition_point(|p| p.b <= r);
                    (prefix[k], suffix[k])
                }
            })
            .collect()
    }
}

/// Peak of 2r^{2j+1}e^{-nQ_eff} (clamped to the domain) and the local scale.
fn locate_peak(ens: &Ensemble, j: usize) -> (f64, f64) {
    let n = ens.n() as f64;
    let target = (2 * j + 1) as f64 / n;
    let (lo, hi) = ens.domain;
    let phi = |r: f64| ens.r_dq_eff(r) - target;
    let peak = if hi.is_finite() && phi(hi) <= 0.0 {
        hi
    } else if lo > 0.0 && phi(lo) >= 0.0 {
        lo
    } else {
        let mut a = if lo > 0.0 { lo } else { 0.5f64.min(0.5 * ens.droplet.r1) };
        while a > 0.0 && phi(a) > 0.0 {
            a *= 0.5;
        }
        let mut b = if hi.is_finite() { hi } else { 2.0f64.max(2.0 * ens.droplet.r1) };
        while phi(b) < 0.0 {
            b *= 2.0;
        }
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                break;
            }
            if phi(m) < 0.0 {
                a = m;
            } else {
                b = m;
            }
        }
        0.5 * (a + b)
    };
    let curvature = (2 * j + 1) as f64 / (peak * peak) + n * ens.d2q_eff(peak);
    let slope = ((2 * j + 1) as f64 / peak - n * ens.r_dq_eff(peak) / peak).abs();
    let mut scale = f64::INFINITY;
    if curvature > 0.0 {
        scale = 1.0 / curvature.sqrt();
    }
    if (peak == lo || peak == hi) && slope > 0.0 {
        scale = scale.min(1.0 / slope);
    }
    if !scale.is_finite() || scale <= 0.0 {
        scale = ens.rho() / (2.0 * n);
    }
    (peak, scale)
}

/// log ∫ 2 r^{2j+1} e^{-nQ_eff(r)} dr.
pub fn log_weighted_norm(ens: &Ensemble, j: usize) -> Result<f64> {
    log_weighted_norm_with(ens, j, &QuadOptions::default())
}

pub fn log_weighted_norm_with(ens: &Ensemble, j: usize, opts: &QuadOptions) -> Result<f64> {
    let w = DegreeWeight::new(ens, j)?;
    let v = w.ln_norm(opts);
    if !v.is_finite() {
        return Err(Error::Consistency(format!("non-finite log norm for degree {j}")).at_degree(j));
    }
    Ok(v)
}

/// Laplace approximation −n v(r_{j/n}) + log(ρ/n) + log Φ(ρ(j/n − 1/2)).
///
/// For hard cuts the Gaussian mass over the cut strip replaces Φ; that form
/// is only used when `hard_cut_form` is set.
pub fn asymptotic_norm(ens: &Ensemble, j: usize, hard_cut_form: bool) -> Result<f64> {
    let spec = &ens.spec;
    let n = spec.n as f64;
    let rho = spec.rho;
    let tau = j as f64 / n;
    let pivot = ens.r_tau(tau)?;
    let base = -n * v_nj(spec, j, pivot)? + (rho / n).ln();
    let xi = rho * (tau - 0.5);
    let ln_phi = match spec.bc {
        BoundaryCondition::Free => limits::phi_c(xi, 1.0, 1.0, rho).ln(),
        BoundaryCondition::Interpolated { c1, c2 } => limits::phi_c(xi, c1, c2, rho).ln(),
        BoundaryCondition::HardAnnulus { tau1, tau2 } if hard_cut_form => {
            ln_gauss_mass(rho * (tau1 - 0.5) - xi, rho * (tau2 - 0.5) - xi)
        }
        BoundaryCondition::HardDisk { tau } if hard_cut_form => {
            ln_gauss_mass(f64::NEG_INFINITY, rho * (tau - 0.5) - xi)
        }
        _ => {
            return Err(Error::Unsupported(
                "asymptotic norm for hard cuts needs the hard-cut form flag".into(),
            ))
        }
    };
    Ok(base + ln_phi)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormTable {
    pub spec_hash: String,
    pub n: usize,
    pub log_norm: Vec<f64>,
    /// r_{j/n}.
    pub pivot: Vec<f64>,
    /// −n v_{n,j}(r_{j/n}).
    pub log_peak: Vec<f64>,
    /// Maximiser of the radial integrand and its local width.
    pub peak: Vec<f64>,
    pub scale: Vec<f64>,
}

impl NormTable {
    pub fn len(&self) -> usize {
        self.log_norm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_norm.is_empty()
    }

    pub fn degree<'a>(&self, ens: &'a Ensemble, j: usize) -> DegreeWeight<'a> {
        DegreeWeight::with_peak(ens, j, self.peak[j], self.scale[j])
    }

    pub fn to_csv(&self) -> String {
        use crate::output::fmt_f64;
        let mut s = format!("# acre norm table v1 spec={} n={}\n", self.spec_hash, self.n);
        s.push_str("j,log_norm,pivot,log_peak,peak,scale\n");
        for j in 0..self.len() {
            s.push_str(&format!(
                "{j},{},{},{},{},{}\n",
                fmt_f64(self.log_norm[j]),
                fmt_f64(self.pivot[j]),
                fmt_f64(self.log_peak[j]),
                fmt_f64(self.peak[j]),
                fmt_f64(self.scale[j])
            ));
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let bad = |m: &str| Error::Consistency(format!("norm table cache: {m}"));
        let mut lines = text.lines();
        let head = lines.next().ok_or_else(|| bad("empty file"))?;
        let mut spec_hash = None;
        let mut n = None;
        for tok in head.split_whitespace() {
            if let Some(v) = tok.strip_prefix("spec=") {
                spec_hash = Some(v.to_string());
            } else if let Some(v) = tok.strip_prefix("n=") {
                n = v.parse::<usize>().ok();
            }
        }
        let (spec_hash, n) = (spec_hash.ok_or_else(|| bad("missing spec hash"))?, n.ok_or_else(|| bad("missing n"))?);
        if lines.next() != Some("j,log_norm,pivot,log_peak,peak,scale") {
            return Err(bad("unexpected column header"));
        }
        let mut t = NormTable {
            spec_hash,
            n,
            log_norm: Vec::with_capacity(n),
            pivot: Vec::with_capacity(n),
            log_peak: Vec::with_capacity(n),
            peak: Vec::with_capacity(n),
            scale: Vec::with_capacity(n),
        };
        for (row, line) in lines.enumerate() {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 6 || f[0].parse::<usize>().ok() != Some(row) {
                return Err(bad(&format!("malformed row {row}")));
            }
            let p = |s: &str| s.parse::<f64>().map_err(|_| bad(&format!("bad number in row {row}")));
            t.log_norm.push(p(f[1])?);
            t.pivot.push(p(f[2])?);
            t.log_peak.push(p(f[3])?);
            t.peak.push(p(f[4])?);
            t.scale.push(p(f[5])?);
        }
        if t.len() != n {
            return Err(bad("row count does not match n"));
        }
        Ok(t)
    }
}

/// All n log norms, computed in parallel with an order-preserving collect.
pub fn norm_table(ens: &Ensemble) -> Result<NormTable> {
    norm_table_with(ens, &QuadOptions::default())
}

pub fn norm_table_with(ens: &Ensemble, opts: &QuadOptions) -> Result<NormTable> {
    let n = ens.n();
    let rows: Vec<Result<(f64, f64, f64, f64, f64)>> = (0..n)
        .into_par_iter()
        .map(|j| {
            let run = || -> Result<_> {
                let w = DegreeWeight::new(ens, j)?;
                let ln = w.ln_norm(opts);
                if !ln.is_finite() {
                    return Err(Error::Consistency("non-finite log norm".into()));
                }
                let pivot = ens.r_tau(j as f64 / n as f64)?;
                // at j = 0 the log term is absent and the pivot may be r = 0
                let log_peak = if j == 0 {
                    -(n as f64) * ens.potential().g(pivot)
                } else {
                    -(n as f64) * v_nj(&ens.spec, j, pivot)?
                };
                Ok((ln, pivot, log_peak, w.peak(), w.scale()))
            };
            run().map_err(|e| e.at_degree(j))
        })
        .collect();
    let mut t = NormTable {
        spec_hash: ens.spec.hash(),
        n,
        log_norm: Vec::with_capacity(n),
        pivot: Vec::with_capacity(n),
        log_peak: Vec::with_capacity(n),
        peak: Vec::with_capacity(n),
        scale: Vec::with_capacity(n),
    };
    for row in rows {
        let (ln, pivot, lp, peak, scale) = row?;
        t.log_norm.push(ln);
        t.pivot.push(pivot);
        t.log_peak.push(lp);
        t.peak.push(peak);
        t.scale.push(scale);
    }
    Ok(t)
}

fn cache_path(dir: &Path, hash: &str) -> PathBuf {
    dir.join(format!("norms-{hash}.csv"))
}

/// Norm table through an on-disk cache keyed by the spec hash.
pub fn norm_table_cached(ens: &Ensemble, dir: Option<&Path>) -> Result<NormTable> {
    let Some(dir) = dir else {
        return norm_table(ens);
    };
    let hash = ens.spec.hash();
    let path = cache_path(dir, &hash);
    if let Ok(text) = std::fs::read_to_string(&path) {
        if let Ok(t) = NormTable::from_csv(&text) {
            if t.spec_hash == hash && t.n == ens.n() {
                return Ok(t);
            }
        }
    }
    let t = norm_table(ens)?;
    std::fs::create_dir_all(dir)?;
    crate::output::write_atomic(&path, t.to_csv().as_bytes())?;
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::make_custom;

    fn gaussian(n: usize) -> Ensemble {
        // Q = r² up to the additive shift: raw coefficient 1 on r², no log term
        let pot = make_custom(&[1.0], 0.0).unwrap();
        Ensemble::new(EnsembleSpec::new(n, 1.0, pot, BoundaryCondition::Free).unwrap()).unwrap()
    }

    fn ln_factorial(j: usize) -> f64 {
        (1..=j).map(|k| (k as f64).ln()).sum()
    }

    #[test]
    fn gamma_integral_oracle() {
        for n in [4usize, 64, 1024] {
            let ens = gaussian(n);
            let shift = ens.potential().shift();
            for j in 0..=64usize.min(n) {
                let got = log_weighted_norm(&ens, j).unwrap() - n as f64 * shift;
                let want = ln_factorial(j) - (j as f64 + 1.0) * (n as f64).ln();
                let tol = 1e-10 * want.abs().max(1.0);
                assert!((got - want).abs() <= tol, "n={n} j={j} got={got} want={want}");
            }
        }
    }

    #[test]
    fn v_nj_basics() {
        let spec = EnsembleSpec::induced_ginibre(64, 2.0, BoundaryCondition::Free).unwrap();
        assert_eq!(v_nj(&spec, 0, 1.1).unwrap(), spec.potential.g(1.1));
        assert_eq!(v_nj(&spec, 17, 1.0).unwrap(), 0.0);
        assert!(v_nj(&spec, 3, 0.0).is_err());
        // grid argmin sits at r_{j/n}
        let j = 40;
        let target = crate::potentials::r_tau(&spec, j as f64 / 64.0).unwrap();
        let step = 1e-5;
        let best = (0..20001)
            .map(|i| 0.9 + step * i as f64)
            .min_by(|a, b| v_nj(&spec, j, *a).unwrap().total_cmp(&v_nj(&spec, j, *b).unwrap()))
            .unwrap();
        assert!((best - target).abs() <= step);
    }

    #[test]
    fn interpolated_unit_blend_gives_identical_norms() {
        let a = Ensemble::new(EnsembleSpec::induced_ginibre(128, 2.0, BoundaryCondition::Free).unwrap()).unwrap();
        let b = Ensemble::new(
            EnsembleSpec::induced_ginibre(128, 2.0, BoundaryCondition::Interpolated { c1: 1.0, c2: 1.0 }).unwrap(),
        )
        .unwrap();
        for j in [0, 31, 64, 127] {
            assert_eq!(
                log_weighted_norm(&a, j).unwrap().to_bits(),
                log_weighted_norm(&b, j).unwrap().to_bits()
            );
        }
    }

    #[test]
    fn finer_quadrature_agrees() {
        for bc in [
            BoundaryCondition::Free,
            BoundaryCondition::Interpolated { c1: 4.0, c2: 0.5 },
            BoundaryCondition::soft_hard(),
            BoundaryCondition::HardAnnulus { tau1: 0.2, tau2: 0.7 },
        ] {
            let ens = Ensemble::new(EnsembleSpec::induced_ginibre(512, 3.0, bc).unwrap()).unwrap();
            for j in [0, 100, 256, 511] {
                let a = log_weighted_norm_with(&ens, j, &QuadOptions::default()).unwrap();
                let b = log_weighted_norm_with(&ens, j, &QuadOptions::default().finer()).unwrap();
                assert!((a - b).abs() <= 1e-9, "bc={bc} j={j} {a} {b}");
            }
        }
    }

    #[test]
    fn asymptotic_norm_close_at_large_n() {
        let ens = Ensemble::new(EnsembleSpec::induced_ginibre(4096, 2.0, BoundaryCondition::Free).unwrap()).unwrap();
        for j in [0, 1024, 2048, 3072, 4095] {
            let exact = log_weighted_norm(&ens, j).unwrap();
            let approx = asymptotic_norm(&ens, j, false).unwrap();
            assert!((1.0 - (approx - exact).exp()).abs() <= 5e-2, "j={j}");
        }
    }

    #[test]
    fn asymptotic_norm_phi_terms() {
        let ens = Ensemble::new(EnsembleSpec::induced_ginibre(256, 2.0, BoundaryCondition::Free).unwrap()).unwrap();
        let j = 128;
        let pivot = ens.r_tau(0.5).unwrap();
        assert_eq!(pivot, 1.0);
        let want = (2.0f64 / 256.0).ln() + crate::special::SQRT_2PI.ln();
        assert!((asymptotic_norm(&ens, j, false).unwrap() - want).abs() < 1e-14);

        let hard = Ensemble::new(
            EnsembleSpec::induced_ginibre(256, 2.0, BoundaryCondition::HardAnnulus { tau1: 0.0, tau2: 1.0 }).unwrap(),
        )
        .unwrap();
        assert!(matches!(asymptotic_norm(&hard, j, false), Err(Error::Unsupported(_))));
        let want = (2.0f64 / 256.0).ln() + ln_gauss_mass(-1.0, 1.0);
        assert!((asymptotic_norm(&hard, j, true).unwrap() - want).abs() < 1e-14);
    }

    #[test]
    fn table_properties() {
        let ens = Ensemble::new(EnsembleSpec::induced_ginibre(1, 1.0, BoundaryCondition::Free).unwrap()).unwrap();
        assert_eq!(norm_table(&ens).unwrap().len(), 1);

        let ens = Ensemble::new(EnsembleSpec::induced_ginibre(256, 2.0, BoundaryCondition::Free).unwrap()).unwrap();
        let t = norm_table(&ens).unwrap();
        assert!(t.log_norm.iter().all(|v| v.is_finite()));
        assert!(t.pivot.windows(2).all(|w| w[1] > w[0]));
        let again = norm_table(&ens).unwrap();
        assert_eq!(t.to_csv(), again.to_csv());
        assert_eq!(NormTable::from_csv(&t.to_csv()).unwrap(), t);
    }

    #[test]
    fn enlarging_hard_annulus_never_decreases_norms() {
        let narrow = Ensemble::new(
            EnsembleSpec::induced_ginibre(256, 2.0, BoundaryCondition::HardAnnulus { tau1: 0.3, tau2: 0.6 }).unwrap(),
        )
        .unwrap();
        let wide = Ensemble::new(
            EnsembleSpec::induced_ginibre(256, 2.0, BoundaryCondition::HardAnnulus { tau1: 0.2, tau2: 0.7 }).unwrap(),
        )
        .unwrap();
        for j in (0..256).step_by(15) {
            assert!(log_weighted_norm(&wide, j).unwrap() >= log_weighted_norm(&narrow, j).unwrap());
        }
    }

    #[test]
    fn partial_masses_add_up() {
        let ens = Ensemble::new(EnsembleSpec::induced_ginibre(300, 2.0, BoundaryCondition::Free).unwrap()).unwrap();
        let w = DegreeWeight::new(&ens, 120).unwrap();
        let opts = QuadOptions::default();
        let ln = w.ln_norm(&opts);
        let radii: Vec<f64> = (0..30).map(|i| 0.99 + 0.0007 * i as f64).collect();
        for (lo, hi) in w.partial_masses(&radii, &opts) {
            let total = ln_add_exp(lo, hi);
            assert!((total - ln).abs() < 1e-12);
        }
    }

    #[test]
    fn cache_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let ens = Ensemble::new(EnsembleSpec::induced_ginibre(64, 2.0, BoundaryCondition::Free).unwrap()).unwrap();
        let a = norm_table_cached(&ens, Some(dir.path())).unwrap();
        let b = norm_table_cached(&ens, Some(dir.path())).unwrap();
        assert_eq!(a, b);
        assert!(cache_path(dir.path(), &ens.spec.hash()).exists());
    }

    #[test]
    fn degree_above_n_is_rejected() {
        let ens = gaussian(4);
        assert!(log_weighted_norm(&ens, 4).is_ok());
        assert!(log_weighted_norm(&ens, 5).is_err());
    }
}
