//! Exact laws of the largest and smallest modulus.
//!
//! The moduli of a radially symmetric determinantal ensemble are independent
//! with the per-degree radial densities, so
//! P(max ≤ r) = Π_j (1 − I_j(r)) where I_j(r) is the share of degree j's mass
//! outside the disk of radius r, and P(min ≥ r) is the same product with the
//! inside share.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::limits::{phi_c, LimitProfile};
use crate::potentials::{BoundaryCondition, Ensemble};
use crate::radialnorms::{NormTable, QuadOptions};

/// Degrees per parallel task; fixed so sums do not depend on the pool size.
const CHUNK: usize = 256;
const OVERSHOOT: f64 = 1e-9;

/// Gap probabilities on a set of radii, computed in one pass over the degrees.
#[derive(Debug, Clone, PartialEq)]
pub struct GapSweep {
    pub radii: Vec<f64>,
    /// ln P(max ≤ r).
    pub ln_max: Vec<f64>,
    /// ln P(min ≥ r).
    pub ln_min: Vec<f64>,
    /// Σ_j I_j(r), the expected number of moduli above r.
    pub outer_mass: Vec<f64>,
    /// Expected number of moduli below r.
    pub inner_mass: Vec<f64>,
}

impl GapSweep {
    pub fn max_cdf(&self) -> Vec<f64> {
        self.ln_max.iter().map(|v| v.exp()).collect()
    }

    pub fn min_survival(&self) -> Vec<f64> {
        self.ln_min.iter().map(|v| v.exp()).collect()
    }
}

/// ln(1 − share) for a share given by its log partial mass and the other side's.
fn ln_complement(ln_part: f64, ln_rest: f64, ln_norm: f64, j: usize) -> Result<f64> {
    let s = ln_part - ln_norm;
    if s > OVERSHOOT.ln_1p() {
        return Err(Error::Consistency(format!(
            "tail share {} exceeds 1 (log norm {ln_norm})",
            s.exp()
        ))
        .at_degree(j));
    }
    Ok(if s < -std::f64::consts::LN_2 {
        (-s.exp()).ln_1p()
    } else {
        (ln_rest - ln_norm).min(0.0)
    })
}

/// One pass over all degrees at the given radii (any order, r > 0).
pub fn gap_sweep(ens: &Ensemble, table: &NormTable, radii: &[f64]) -> Result<GapSweep> {
    if let Some(r) = radii.iter().find(|r| !(**r > 0.0)) {
        return Err(Error::domain(format!("gap probability needs r > 0, got {r}")));
    }
    if table.spec_hash != ens.spec.hash() || table.len() != ens.n() {
        return Err(Error::Config("norm table does not belong to this ensemble".into()));
    }
    let mut order: Vec<usize> = (0..radii.len()).collect();
    order.sort_by(|&a, &b| radii[a].total_cmp(&radii[b]));
    let sorted: Vec<f64> = order.iter().map(|&i| radii[i]).collect();
    let m = sorted.len();
    let opts = QuadOptions::default();
    let n = ens.n();

    let chunks: Vec<[Vec<f64>; 4]> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut acc = [vec![0.0; m], vec![0.0; m], vec![0.0; m], vec![0.0; m]];
            for j in c * CHUNK..((c + 1) * CHUNK).min(n) {
                let ln_norm = table.log_norm[j];
                let w = table.degree(ens, j);
                for (k, (lo, hi)) in w.partial_masses(&sorted, &opts).into_iter().enumerate() {
                    acc[0][k] += ln_complement(hi, lo, ln_norm, j)?;
                    acc[1][k] += ln_complement(lo, hi, ln_norm, j)?;
                    acc[2][k] += (hi - ln_norm).exp().min(1.0);
                    acc[3][k] += (lo - ln_norm).exp().min(1.0);
                }
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;

    let mut total = [vec![0.0; m], vec![0.0; m], vec![0.0; m], vec![0.0; m]];
    for chunk in &chunks {
        for (t, c) in total.iter_mut().zip(chunk) {
            for (a, b) in t.iter_mut().zip(c) {
                *a += b;
            }
        }
    }
    // back to the caller's order
    let unsort = |v: &[f64]| {
        let mut out = vec![0.0; m];
        for (k, &i) in order.iter().enumerate() {
            out[i] = v[k];
        }
        out
    };
    Ok(GapSweep {
        radii: radii.to_vec(),
        ln_max: unsort(&total[0]),
        ln_min: unsort(&total[1]),
        outer_mass: unsort(&total[2]),
        inner_mass: unsort(&total[3]),
    })
}

/// P(max modulus ≤ r).
pub fn gap_cdf_max(ens: &Ensemble, table: &NormTable, r: f64) -> Result<f64> {
    Ok(gap_sweep(ens, table, &[r])?.ln_max[0].exp())
}

/// P(min modulus ≥ r).
pub fn gap_cdf_min(ens: &Ensemble, table: &NormTable, r: f64) -> Result<f64> {
    Ok(gap_sweep(ens, table, &[r])?.ln_min[0].exp())
}

/// Centering and scaling of the extreme moduli.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScalingConstants {
    /// Both confinement parameters finite: Gumbel fluctuations.
    InterpolatedFinite {
        max_scale: f64,
        max_center: f64,
        min_scale: f64,
        min_center: f64,
        /// The logarithmic corrections entering the scales, outer then inner.
        log_term: f64,
        log_term_min: f64,
    },
    /// Hard walls on both sides of a soft droplet: exponential fluctuations.
    SoftHard { rate: f64, rate_min: f64, r0: f64, r1: f64, n: usize, rho: f64 },
}

pub fn scaling_constants(ens: &Ensemble) -> Result<ScalingConstants> {
    let (c1, c2) = match ens.spec.bc {
        BoundaryCondition::Free => (1.0, 1.0),
        BoundaryCondition::Interpolated { c1, c2 } => (c1, c2),
        bc => return Err(Error::Unsupported(format!("no extreme-modulus scaling for {bc}"))),
    };
    let n = ens.n();
    let nf = n as f64;
    let rho = ens.rho();
    let (r0, r1) = (ens.droplet.r0, ens.droplet.r1);
    match (c1.is_finite(), c2.is_finite()) {
        (true, true) => {
            let base = 2.0 * (nf / rho).ln() - 2.0 * nf.ln().ln();
            let log_term = base - 2.0 * (2.0 * phi_c(0.5 * rho, c1, c2, rho)).ln();
            let log_term_min = base - 2.0 * (2.0 * phi_c(-0.5 * rho, c1, c2, rho)).ln();
            if !(log_term > 0.0 && log_term_min > 0.0) {
                return Err(Error::domain(format!(
                    "n = {n} too small for the Gumbel scaling at ρ = {rho} (log terms {log_term}, {log_term_min})"
                )));
            }
            let step = rho / (2.0 * nf);
            Ok(ScalingConstants::InterpolatedFinite {
                max_scale: (c2 * log_term).sqrt() / step,
                max_center: r1 + step * (log_term / c2).sqrt(),
                min_scale: (c1 * log_term_min).sqrt() / step,
                min_center: r0 - step * (log_term_min / c1).sqrt(),
                log_term,
                log_term_min,
            })
        }
        (false, false) => {
            let profile = LimitProfile::SoftHard { rho };
            let rate = 2.0 * profile.density(0.25 * rho);
            let rate_min = 2.0 * profile.density(-0.25 * rho);
            if !(rate > 0.0 && rate_min > 0.0) {
                return Err(Error::Consistency(format!("non-positive edge density {rate}, {rate_min}")));
            }
            Ok(ScalingConstants::SoftHard { rate, rate_min, r0, r1, n, rho })
        }
        _ => Err(Error::Unsupported(format!(
            "mixed confinement ({c1}, {c2}) has no stated extreme-modulus law"
        ))),
    }
}

impl ScalingConstants {
    pub fn is_gumbel(&self) -> bool {
        matches!(self, ScalingConstants::InterpolatedFinite { .. })
    }

    /// Limit law of both rescaled extremes.
    pub fn reference(&self, x: f64) -> f64 {
        match self {
            ScalingConstants::InterpolatedFinite { .. } => (-(-x).exp()).exp(),
            ScalingConstants::SoftHard { .. } => x.min(0.0).exp(),
        }
    }

    fn check_x(&self, x: f64) -> Result<()> {
        if !x.is_finite() || (!self.is_gumbel() && x > 0.0) {
            return Err(Error::domain(format!("x = {x} outside the support of the limit law")));
        }
        Ok(())
    }

    /// Radius r with {ω ≤ x} = {max ≤ r}.
    pub fn max_radius(&self, x: f64) -> Result<f64> {
        self.check_x(x)?;
        Ok(match *self {
            ScalingConstants::InterpolatedFinite { max_scale, max_center, .. } => max_center + x / max_scale,
            ScalingConstants::SoftHard { rate, r1, n, rho, .. } => r1 + rho * rho * x / (rate * (n * n) as f64),
        })
    }

    /// Radius r with {u ≤ x} = {min ≥ r}.
    pub fn min_radius(&self, x: f64) -> Result<f64> {
        self.check_x(x)?;
        Ok(match *self {
            ScalingConstants::InterpolatedFinite { min_scale, min_center, .. } => min_center - x / min_scale,
            ScalingConstants::SoftHard { rate_min, r0, n, rho, .. } => r0 - rho * rho * x / (rate_min * (n * n) as f64),
        })
    }
}

/// Exact and limiting laws of the rescaled extremes on an x grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GapCurve {
    pub xs: Vec<f64>,
    /// P(ω ≤ x).
    pub max_cdf: Vec<f64>,
    /// P(u ≤ x).
    pub min_cdf: Vec<f64>,
    pub reference: Vec<f64>,
    /// Expected number of moduli beyond the max-side radius.
    pub outer_mass: Vec<f64>,
}

impl GapCurve {
    pub fn sup_distance_max(&self) -> f64 {
        sup_distance(&self.max_cdf, &self.reference)
    }

    pub fn sup_distance_min(&self) -> f64 {
        sup_distance(&self.min_cdf, &self.reference)
    }
}

fn sup_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Radii outside (0, ∞) mean the event is certain or impossible.
fn radius_or_edge(r: f64) -> f64 {
    if r > 0.0 { r } else { f64::MIN_POSITIVE }
}

pub fn gap_curve(ens: &Ensemble, table: &NormTable, xs: &[f64]) -> Result<GapCurve> {
    let sc = scaling_constants(ens)?;
    let mut radii = Vec::with_capacity(2 * xs.len());
    for &x in xs {
        radii.push(radius_or_edge(sc.max_radius(x)?));
    }
    for &x in xs {
        radii.push(radius_or_edge(sc.min_radius(x)?));
    }
    let sweep = gap_sweep(ens, table, &radii)?;
    let k = xs.len();
    Ok(GapCurve {
        xs: xs.to_vec(),
        max_cdf: sweep.ln_max[..k].iter().map(|v| v.exp()).collect(),
        min_cdf: sweep.ln_min[k..].iter().map(|v| v.exp()).collect(),
        reference: xs.iter().map(|&x| sc.reference(x)).collect(),
        outer_mass: sweep.outer_mass[..k].to_vec(),
    })
}

/// P(ω ≤ x).
pub fn omega_cdf(ens: &Ensemble, table: &NormTable, x: f64) -> Result<f64> {
    let r = scaling_constants(ens)?.max_radius(x)?;
    gap_cdf_max(ens, table, radius_or_edge(r))
}

/// P(u ≤ x).
pub fn u_cdf(ens: &Ensemble, table: &NormTable, x: f64) -> Result<f64> {
    let r = scaling_constants(ens)?.min_radius(x)?;
    gap_cdf_min(ens, table, radius_or_edge(r))
}

/// Sum over degrees of the mass beyond the max-side radius; tends to e^{−x}.
pub fn expected_exceedances(ens: &Ensemble, table: &NormTable, x: f64) -> Result<f64> {
    let sc = scaling_constants(ens)?;
    if !sc.is_gumbel() {
        return Err(Error::Unsupported("exceedance sums need finite confinement on both sides".into()));
    }
    Ok(gap_sweep(ens, table, &[sc.max_radius(x)?])?.outer_mass[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::{make_custom, EnsembleSpec};
    use crate::radialnorms::norm_table;

    fn gaussian(n: usize) -> Ensemble {
        let pot = make_custom(&[1.0], 0.0).unwrap();
        Ensemble::new(EnsembleSpec::new(n, 1.0, pot, BoundaryCondition::Free).unwrap()).unwrap()
    }

    fn ginibre(n: usize, rho: f64, bc: BoundaryCondition) -> (Ensemble, NormTable) {
        let ens = Ensemble::new(EnsembleSpec::induced_ginibre(n, rho, bc).unwrap()).unwrap();
        let t = norm_table(&ens).unwrap();
        (ens, t)
    }

    #[test]
    fn single_rayleigh_modulus() {
        let ens = gaussian(1);
        let t = norm_table(&ens).unwrap();
        for r in [0.1, 0.5, 1.0, 1.7, 3.0] {
            let want = 1.0 - (-r * r as f64).exp();
            let max = gap_cdf_max(&ens, &t, r).unwrap();
            let min = gap_cdf_min(&ens, &t, r).unwrap();
            assert!((max - want).abs() < 1e-12, "r={r} {max} {want}");
            assert!((min - (1.0 - want)).abs() < 1e-12);
            assert!((max + min - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn hard_walls_make_events_certain() {
        let (ens, t) = ginibre(64, 2.0, BoundaryCondition::HardAnnulus { tau1: 0.25, tau2: 0.75 });
        let (lo, hi) = ens.domain;
        assert_eq!(gap_cdf_max(&ens, &t, hi).unwrap(), 1.0);
        assert_eq!(gap_cdf_max(&ens, &t, hi * 1.01).unwrap(), 1.0);
        assert_eq!(gap_cdf_min(&ens, &t, lo).unwrap(), 1.0);
        assert_eq!(gap_cdf_min(&ens, &t, lo * 0.99).unwrap(), 1.0);
    }

    #[test]
    fn monotone_on_grid() {
        let (ens, t) = ginibre(200, 2.0, BoundaryCondition::Free);
        let radii: Vec<f64> = (0..50).map(|i| 0.97 + 0.0012 * i as f64).collect();
        let s = gap_sweep(&ens, &t, &radii).unwrap();
        let max = s.max_cdf();
        let min = s.min_survival();
        assert!(max.windows(2).all(|w| w[0] <= w[1]));
        assert!(min.windows(2).all(|w| w[0] >= w[1]));
        assert!(max.iter().chain(&min).all(|p| (0.0..=1.0).contains(p)));
        // sweep order does not matter
        let mut rev = radii.clone();
        rev.reverse();
        let s2 = gap_sweep(&ens, &t, &rev).unwrap();
        let mut back = s2.ln_max.clone();
        back.reverse();
        assert_eq!(back, s.ln_max);
    }

    #[test]
    fn rejects_bad_input() {
        let (ens, t) = ginibre(64, 2.0, BoundaryCondition::Free);
        assert!(matches!(gap_cdf_max(&ens, &t, 0.0), Err(Error::Domain(_))));
        let (other, _) = ginibre(32, 2.0, BoundaryCondition::Free);
        assert!(gap_cdf_max(&other, &t, 1.0).is_err());
    }

    #[test]
    fn symmetric_log_terms_agree() {
        let ens = Ensemble::new(
            EnsembleSpec::induced_ginibre(1000, 2.0, BoundaryCondition::Interpolated { c1: 3.0, c2: 3.0 }).unwrap(),
        )
        .unwrap();
        match scaling_constants(&ens).unwrap() {
            ScalingConstants::InterpolatedFinite { log_term, log_term_min, .. } => {
                assert!((log_term - log_term_min).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn soft_hard_rate_golden() {
        let ens = Ensemble::new(EnsembleSpec::induced_ginibre(2000, 4.0, BoundaryCondition::soft_hard()).unwrap()).unwrap();
        match scaling_constants(&ens).unwrap() {
            ScalingConstants::SoftHard { rate, rate_min, .. } => {
                assert!((rate - 1.391_720_944_286_391_1).abs() < 1e-9, "{rate}");
                assert!((rate - rate_min).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn regime_errors() {
        let small = Ensemble::new(EnsembleSpec::induced_ginibre(4, 2.0, BoundaryCondition::Free).unwrap()).unwrap();
        assert!(matches!(scaling_constants(&small), Err(Error::Domain(_))));
        let mixed = Ensemble::new(
            EnsembleSpec::induced_ginibre(1000, 2.0, BoundaryCondition::Interpolated { c1: f64::INFINITY, c2: 2.0 }).unwrap(),
        )
        .unwrap();
        assert!(matches!(scaling_constants(&mixed), Err(Error::Unsupported(_))));
        let annulus = Ensemble::new(
            EnsembleSpec::induced_ginibre(1000, 2.0, BoundaryCondition::HardAnnulus { tau1: 0.2, tau2: 0.8 }).unwrap(),
        )
        .unwrap();
        assert!(matches!(scaling_constants(&annulus), Err(Error::Unsupported(_))));
    }

    #[test]
    fn reference_values() {
        let (ens, t) = ginibre(2000, 4.0, BoundaryCondition::soft_hard());
        let sc = scaling_constants(&ens).unwrap();
        assert_eq!(sc.reference(0.0), 1.0);
        assert!(matches!(omega_cdf(&ens, &t, 0.5), Err(Error::Domain(_))));
        // ω ≤ 0 always: the outermost modulus cannot pass the wall
        assert_eq!(omega_cdf(&ens, &t, 0.0).unwrap(), 1.0);
        let (ens, _) = ginibre(1000, 2.0, BoundaryCondition::Free);
        let g = scaling_constants(&ens).unwrap();
        assert!((g.reference(0.0) - (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn exceedances_match_log_cdf() {
        let (ens, t) = ginibre(1000, 2.0, BoundaryCondition::Free);
        let xs: Vec<f64> = (0..7).map(|i| -1.0 + i as f64).collect();
        let curve = gap_curve(&ens, &t, &xs).unwrap();
        let mut last = f64::INFINITY;
        for (k, &x) in xs.iter().enumerate() {
            let e = expected_exceedances(&ens, &t, x).unwrap();
            assert!(e > 0.0 && e < last);
            last = e;
            assert!((e - curve.outer_mass[k]).abs() <= 1e-10 * e);
            let neg_log = -curve.max_cdf[k].ln();
            if e < 0.5 {
                assert!((neg_log - e).abs() <= e * e, "x={x} {neg_log} {e}");
            }
            let direct = omega_cdf(&ens, &t, x).unwrap();
            assert!((direct - curve.max_cdf[k]).abs() < 1e-10);
        }
    }
}
