//! Flat `key=value` ensemble configuration.
//!
//! One assignment per line; blank lines and lines starting with `#` are
//! ignored, as is whitespace around keys and values. Keys:
//!
//! | key | values |
//! |-----|--------|
//! | `family` | `induced-ginibre` (default), `power-log`, `custom` |
//! | `n`, `rho` | positive integer, positive real |
//! | `bc.kind` | `free` (default), `interpolated`, `softhard`, `hard-annulus`, `hard-disk` |
//! | `bc.c1`, `bc.c2` | positive real or `inf` |
//! | `bc.tau1`, `bc.tau2`, `bc.tau` | real |
//! | `lambda` | power-log exponent |
//! | `alpha` | comma-separated coefficients of r², r⁴, ... (custom) |
//! | `beta` | log weight (custom) |

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::potentials::{make_custom, make_induced_ginibre, make_power_log, BoundaryCondition, EnsembleSpec};

pub const KEYS: [&str; 12] =
    ["family", "n", "rho", "bc.kind", "bc.c1", "bc.c2", "bc.tau1", "bc.tau2", "bc.tau", "lambda", "alpha", "beta"];

/// Parsed assignments, later entries overriding earlier ones.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SpecConfig {
    values: BTreeMap<String, String>,
}

impl SpecConfig {
    /// Parse a config text; duplicate keys within one text and unknown keys
    /// are errors, all unknown keys reported together.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut unknown = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key=value, got {line:?}", i + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            if !KEYS.contains(&k) {
                unknown.push(k.to_string());
                continue;
            }
            if cfg.values.insert(k.to_string(), v.to_string()).is_some() {
                return Err(Error::Config(format!("line {}: duplicate key {k}", i + 1)));
            }
        }
        if !unknown.is_empty() {
            return Err(Error::Config(format!("unknown keys: {}", unknown.join(", "))));
        }
        Ok(cfg)
    }

    /// Set one `key=value` override.
    pub fn set(&mut self, assignment: &str) -> Result<()> {
        let (k, v) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("expected key=value, got {assignment:?}")))?;
        let (k, v) = (k.trim(), v.trim());
        if !KEYS.contains(&k) {
            return Err(Error::Config(format!("unknown keys: {k}")));
        }
        self.values.insert(k.to_string(), v.to_string());
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn real(&self, key: &str) -> Result<Option<f64>> {
        self.get(key).map(|v| parse_real(key, v)).transpose()
    }

    fn required(&self, key: &str) -> Result<f64> {
        self.real(key)?.ok_or_else(|| Error::Config(format!("missing key {key}")))
    }

    pub fn boundary(&self) -> Result<BoundaryCondition> {
        let kind = self.get("bc.kind").unwrap_or("free");
        let bc = match kind {
            "free" => BoundaryCondition::Free,
            "softhard" => BoundaryCondition::soft_hard(),
            "interpolated" => BoundaryCondition::Interpolated { c1: self.required("bc.c1")?, c2: self.required("bc.c2")? },
            "hard-annulus" => {
                BoundaryCondition::HardAnnulus { tau1: self.required("bc.tau1")?, tau2: self.required("bc.tau2")? }
            }
            "hard-disk" => BoundaryCondition::HardDisk { tau: self.required("bc.tau")? },
            other => return Err(Error::Config(format!("unknown bc.kind {other:?}"))),
        };
        bc.check().map_err(config_error)?;
        Ok(bc)
    }

    /// Ensemble spec with `n` taken from the config.
    pub fn spec(&self) -> Result<EnsembleSpec> {
        let n = self.get("n").ok_or_else(|| Error::Config("missing key n".into()))?;
        let n: usize = n.parse().map_err(|_| Error::Config(format!("n: expected a positive integer, got {n:?}")))?;
        self.spec_with_n(n)
    }

    /// Ensemble spec at a given size (ladder runs).
    pub fn spec_with_n(&self, n: usize) -> Result<EnsembleSpec> {
        let rho = self.required("rho")?;
        let bc = self.boundary()?;
        let family = self.get("family").unwrap_or("induced-ginibre");
        let pot = match family {
            "induced-ginibre" => make_induced_ginibre(n, rho),
            "power-log" => make_power_log(n, rho, self.required("lambda")?),
            "custom" => {
                let alpha = self.get("alpha").ok_or_else(|| Error::Config("missing key alpha".into()))?;
                let coeffs = alpha.split(',').map(|v| parse_real("alpha", v.trim())).collect::<Result<Vec<_>>>()?;
                make_custom(&coeffs, self.real("beta")?.unwrap_or(0.0))
            }
            other => return Err(Error::Config(format!("unknown family {other:?}"))),
        }
        .map_err(config_error)?;
        EnsembleSpec::new(n, rho, pot, bc).map_err(config_error)
    }
}

fn config_error(e: Error) -> Error {
    match e {
        Error::Domain(m) => Error::Config(m),
        e => e,
    }
}

/// Real number or `inf`.
pub fn parse_real(key: &str, v: &str) -> Result<f64> {
    match v {
        "inf" | "+inf" => Ok(f64::INFINITY),
        _ => v
            .parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .ok_or_else(|| Error::Config(format!("{key}: expected a number, got {v:?}"))),
    }
}

/// `start:stop:step` inclusive of both ends (up to rounding).
pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let [a, b, h] = parts.as_slice() else {
        return Err(Error::Config(format!("grid: expected start:stop:step, got {s:?}")));
    };
    let (a, b, h) = (parse_real("grid", a)?, parse_real("grid", b)?, parse_real("grid", h)?);
    if !(h > 0.0) || b < a {
        return Err(Error::Config(format!("grid: need start ≤ stop and step > 0, got {s:?}")));
    }
    let m = ((b - a) / h + 1e-9).floor() as usize;
    if m > 10_000_000 {
        return Err(Error::Config(format!("grid: {m} points is too many")));
    }
    // a + k·h with exact integer multiples keeps nodes like 0 exactly representable
    Ok((0..=m).map(|k| a + k as f64 * h).map(|x| if x.abs() < 1e-12 * h { 0.0 } else { x }).collect())
}

/// Comma-separated positive integers.
pub fn parse_ladder(s: &str) -> Result<Vec<usize>> {
    let v: Vec<usize> = s
        .split(',')
        .map(|t| t.trim().parse::<usize>().ok().filter(|n| *n > 0))
        .collect::<Option<_>>()
        .ok_or_else(|| Error::Config(format!("ladder: expected comma-separated positive integers, got {s:?}")))?;
    if v.is_empty() {
        return Err(Error::Config("ladder is empty".into()));
    }
    Ok(v)
}
