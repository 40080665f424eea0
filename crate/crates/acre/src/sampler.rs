//! Exact sampling of the moduli.
//!
//! The moduli are independent, degree j having radial density
//! 2r^{2j+1}e^{-nQ_eff(r)}/‖ζʲ‖². Each degree gets an inverse-CDF table;
//! draws are reproducible per (seed, trial, degree).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::extremes::{scaling_constants, ScalingConstants};
use crate::potentials::Ensemble;
use crate::radialnorms::{DegreeWeight, NormTable, QuadOptions};
use crate::special::ln_add_exp;

pub const TABLE_NODES: usize = 2048;
const COVERAGE: f64 = 1e-12;
const HALF_WIDTH: f64 = 12.0;
const MAX_REJECTIONS: usize = 1 << 20;

/// Inverse CDF of one degree: monotone cubic Hermite of r against F(r).
#[derive(Debug, Clone)]
pub struct DegreeTable {
    r_start: f64,
    dr: f64,
    cdf: Vec<f64>,
    /// dr/dF at each node.
    slope: Vec<f64>,
    /// ln density at the two end nodes, for tail rejection.
    ln_edge: (f64, f64),
    ln_total: f64,
    scale: f64,
    domain: (f64, f64),
}

impl DegreeTable {
    pub fn build(w: &DegreeWeight<'_>, domain: (f64, f64)) -> Result<Self> {
        let opts = QuadOptions::default();
        let (lo, hi) = domain;
        let s = w.scale();
        let mut half = HALF_WIDTH;
        loop {
            let a = lo.max(w.peak() - half * s);
            let b = hi.min(w.peak() + half * s);
            let dr = (b - a) / (TABLE_NODES - 1) as f64;
            let radii: Vec<f64> = (0..TABLE_NODES).map(|k| a + dr * k as f64).collect();
            let masses = w.partial_masses(&radii, &opts);
            let total = ln_add_exp(masses[0].0, masses[0].1);
            if !total.is_finite() {
                return Err(Error::Consistency("degree weight has no mass".into()));
            }
            let cdf: Vec<f64> = masses
                .iter()
                .map(|&(l, u)| {
                    let (fl, fu) = ((l - total).exp(), (u - total).exp());
                    if fl <= fu { fl } else { 1.0 - fu }.clamp(0.0, 1.0)
                })
                .collect();
            let covered = (a <= lo || cdf[0] <= COVERAGE) && (b >= hi || cdf[TABLE_NODES - 1] >= 1.0 - COVERAGE);
            if !covered && half < 64.0 * HALF_WIDTH {
                half *= 2.0;
                continue;
            }
            let ln_density: Vec<f64> = radii.iter().map(|&r| w.h(r) - total).collect();
            let slope = limited_slopes(&cdf, dr, &ln_density);
            return Ok(Self {
                r_start: a,
                dr,
                cdf,
                slope,
                ln_edge: (ln_density[0], ln_density[TABLE_NODES - 1]),
                ln_total: total,
                scale: s,
                domain,
            });
        }
    }

    pub fn range(&self) -> (f64, f64) {
        (self.r_start, self.node(TABLE_NODES - 1))
    }

    fn node(&self, k: usize) -> f64 {
        self.r_start + self.dr * k as f64
    }

    /// Tabulated CDF at node k.
    pub fn cdf_at_node(&self, k: usize) -> f64 {
        self.cdf[k]
    }

    /// r with F(r) = u for u inside the tabulated range.
    pub fn quantile(&self, u: f64) -> f64 {
        let last = TABLE_NODES - 1;
        if u <= self.cdf[0] {
            return self.r_start;
        }
        if u >= self.cdf[last] {
            return self.node(last);
        }
        let k = self.cdf.partition_point(|&f| f <= u) - 1;
        let (f0, f1) = (self.cdf[k], self.cdf[k + 1]);
        let h = f1 - f0;
        if h <= 0.0 {
            return self.node(k);
        }
        let t = (u - f0) / h;
        let (r0, r1) = (self.node(k), self.node(k + 1));
        let (m0, m1) = (self.slope[k] * h, self.slope[k + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        let r = (2.0 * t3 - 3.0 * t2 + 1.0) * r0 + (t3 - 2.0 * t2 + t) * m0 + (-2.0 * t3 + 3.0 * t2) * r1 + (t3 - t2) * m1;
        r.clamp(r0, r1)
    }

    /// One draw from a uniform; uniforms outside the table go to tail
    /// rejection against a flat envelope, valid because the density is
    /// monotone beyond the table ends.
    fn draw<'a, R: Rng>(&self, u: f64, w: impl Fn() -> DegreeWeight<'a>, rng: &mut R) -> f64 {
        let last = self.node(TABLE_NODES - 1);
        let (a, b, top, fallback) = if u < self.cdf[0] {
            (self.domain.0.max(self.r_start - 40.0 * self.scale), self.r_start, self.ln_edge.0, self.r_start)
        } else if u > self.cdf[TABLE_NODES - 1] {
            (last, self.domain.1.min(last + 40.0 * self.scale), self.ln_edge.1, last)
        } else {
            return self.quantile(u);
        };
        let w = w();
        for _ in 0..MAX_REJECTIONS {
            let r = a + (b - a) * rng.random::<f64>();
            let v: f64 = rng.random();
            if v.ln() + top <= w.h(r) - self.ln_total {
                return r;
            }
        }
        fallback
    }
}

/// Exact node slopes dr/dF = 1/density, limited so the Hermite pieces stay
/// monotone (Fritsch–Carlson); secants stand in where the density underflows.
fn limited_slopes(cdf: &[f64], dr: f64, ln_density: &[f64]) -> Vec<f64> {
    let m = cdf.len();
    let secant: Vec<f64> = cdf
        .windows(2)
        .map(|w| if w[1] > w[0] { dr / (w[1] - w[0]) } else { f64::INFINITY })
        .collect();
    let mut slope: Vec<f64> = (0..m)
        .map(|k| {
            let exact = (-ln_density[k]).exp();
            if exact.is_finite() && exact > 0.0 {
                exact
            } else {
                let left = if k > 0 { secant[k - 1] } else { secant[0] };
                let right = if k + 1 < m { secant[k] } else { secant[m - 2] };
                let s = left.min(right);
                if s.is_finite() { s } else { 0.0 }
            }
        })
        .collect();
    for k in 0..m - 1 {
        let d = secant[k];
        if !d.is_finite() {
            slope[k] = 0.0;
            slope[k + 1] = 0.0;
            continue;
        }
        let (a, b) = (slope[k] / d, slope[k + 1] / d);
        let q = a * a + b * b;
        if q > 9.0 {
            let t = 3.0 / q.sqrt();
            slope[k] = t * a * d;
            slope[k + 1] = t * b * d;
        }
    }
    slope
}

#[derive(Debug, Clone)]
pub struct ModuliSampler {
    ens: Ensemble,
    table: NormTable,
    degrees: Vec<DegreeTable>,
    seed: u64,
}

impl ModuliSampler {
    pub fn new(ens: Ensemble, table: NormTable, seed: u64) -> Result<Self> {
        if table.spec_hash != ens.spec.hash() || table.len() != ens.n() {
            return Err(Error::Config("norm table does not belong to this ensemble".into()));
        }
        let degrees = (0..ens.n())
            .into_par_iter()
            .map(|j| DegreeTable::build(&table.degree(&ens, j), ens.domain).map_err(|e| e.at_degree(j)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { ens, table, degrees, seed })
    }

    pub fn ensemble(&self) -> &Ensemble {
        &self.ens
    }

    pub fn table(&self) -> &NormTable {
        &self.table
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn degree_table(&self, j: usize) -> &DegreeTable {
        &self.degrees[j]
    }

    /// Generator for one (trial, degree) pair, independent of evaluation order.
    pub fn rng(&self, trial: u64, j: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(trial);
        rng.set_word_pos((j as u128) << 16);
        rng
    }

    pub fn draw_degree(&self, trial: u64, j: usize) -> f64 {
        self.draw(j, &mut self.rng(trial, j))
    }

    fn draw(&self, j: usize, rng: &mut ChaCha8Rng) -> f64 {
        let u: f64 = rng.random();
        self.degrees[j].draw(u, || self.table.degree(&self.ens, j), rng)
    }

    /// Moduli of one trial, indexed by degree.
    pub fn sample_moduli(&self, trial: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(trial);
        (0..self.ens.n())
            .map(|j| {
                rng.set_word_pos((j as u128) << 16);
                self.draw(j, &mut rng)
            })
            .collect()
    }

    /// (max, min) modulus of each trial.
    pub fn extremes(&self, trials: u64) -> Vec<(f64, f64)> {
        (0..trials)
            .into_par_iter()
            .map(|t| {
                let m = self.sample_moduli(t);
                let max = m.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let min = m.iter().copied().fold(f64::INFINITY, f64::min);
                (max, min)
            })
            .collect()
    }
}

/// Sorted sample with its step-function CDF.
#[derive(Debug, Clone, PartialEq)]
pub struct Ecdf {
    pub sorted: Vec<f64>,
}

impl Ecdf {
    pub fn new(mut xs: Vec<f64>) -> Self {
        xs.sort_by(f64::total_cmp);
        Self { sorted: xs }
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn eval(&self, x: f64) -> f64 {
        if self.sorted.is_empty() {
            return 0.0;
        }
        self.sorted.partition_point(|&v| v <= x) as f64 / self.sorted.len() as f64
    }

    /// sup |F_emp − F| given F at the sorted sample points (F continuous).
    pub fn ks_against(&self, cdf_at_samples: &[f64]) -> f64 {
        ks_statistic(&self.sorted, cdf_at_samples)
    }
}

/// One-sample KS distance; `cdf` holds F at each sorted sample.
pub fn ks_statistic(sorted: &[f64], cdf: &[f64]) -> f64 {
    let m = sorted.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        // ties share one jump
        let mut k = i;
        while k + 1 < sorted.len() && sorted[k + 1] == sorted[i] {
            k += 1;
        }
        let f = cdf[i];
        d = d.max((f - i as f64 / m).abs()).max(((k + 1) as f64 / m - f).abs());
        i = k + 1;
    }
    d
}

/// Two-sample KS distance between sorted samples.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// 99% one-sample KS band for m draws.
pub fn ks_band(m: usize) -> f64 {
    1.63 / (m as f64).sqrt()
}

/// Rescaled extremes ω and u over many trials.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalExtremes {
    pub scaling: ScalingConstants,
    pub max_moduli: Vec<f64>,
    pub min_moduli: Vec<f64>,
    pub omega: Ecdf,
    pub u: Ecdf,
}

pub fn ecdf_extremes(sampler: &ModuliSampler, trials: u64) -> Result<EmpiricalExtremes> {
    let scaling = scaling_constants(&sampler.ens)?;
    let ext = sampler.extremes(trials);
    let max_moduli: Vec<f64> = ext.iter().map(|e| e.0).collect();
    let min_moduli: Vec<f64> = ext.iter().map(|e| e.1).collect();
    let omega = Ecdf::new(max_moduli.iter().map(|&r| scaling.rescale_max(r)).collect());
    let u = Ecdf::new(min_moduli.iter().map(|&r| scaling.rescale_min(r)).collect());
    Ok(EmpiricalExtremes { scaling, max_moduli, min_moduli, omega, u })
}

/// Counts of all moduli per radial bin, and the count per trial per unit radius.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub trials: u64,
}

impl Histogram {
    /// Empirical radial intensity, comparable to 2r·K(r, r).
    pub fn density(&self) -> Vec<f64> {
        self.counts
            .iter()
            .zip(self.edges.windows(2))
            .map(|(c, e)| *c as f64 / (self.trials as f64 * (e[1] - e[0])))
            .collect()
    }
}

pub fn histogram_profile(sampler: &ModuliSampler, trials: u64, edges: &[f64]) -> Result<Histogram> {
    if edges.len() < 2 || edges.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Config("histogram edges must be strictly increasing, at least two".into()));
    }
    let nb = edges.len() - 1;
    let per_trial: Vec<Vec<u64>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut c = vec![0u64; nb];
            for r in sampler.sample_moduli(t) {
                if r >= edges[0] && r <= edges[nb] {
                    c[edges.partition_point(|&e| e <= r).min(nb) - 1] += 1;
                }
            }
            c
        })
        .collect();
    let mut counts = vec![0u64; nb];
    for c in &per_trial {
        for (a, b) in counts.iter_mut().zip(c) {
            *a += b;
        }
    }
    Ok(Histogram { edges: edges.to_vec(), counts, trials })
}

impl ScalingConstants {
    /// ω for a realised maximal modulus.
    pub fn rescale_max(&self, r: f64) -> f64 {
        match *self {
            ScalingConstants::InterpolatedFinite { max_scale, max_center, .. } => max_scale * (r - max_center),
            ScalingConstants::SoftHard { rate, r1, n, rho, .. } => rate * (n * n) as f64 / (rho * rho) * (r - r1),
        }
    }

    /// u for a realised minimal modulus.
    pub fn rescale_min(&self, r: f64) -> f64 {
        match *self {
            ScalingConstants::InterpolatedFinite { min_scale, min_center, .. } => min_scale * (min_center - r),
            ScalingConstants::SoftHard { rate_min, r0, n, rho, .. } => rate_min * (n * n) as f64 / (rho * rho) * (r0 - r),
        }
    }
}
