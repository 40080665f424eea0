//! The `acre` command line.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::{parse_grid, parse_ladder, parse_real, SpecConfig};
use crate::error::{Error, Result};
use crate::extremes::{gap_curve, gap_sweep, scaling_constants, expected_exceedances};
use crate::finitekernel::KernelContext;
use crate::limits::LimitProfile;
use crate::output::{emit_svg, write_atomic, CsvTable, Series, SvgStyle, VERSION};
use crate::potentials::{validate, Ensemble, EnsembleSpec};
use crate::radialnorms::{norm_table_cached, NormTable};
use crate::sampler::{ks_band, ks_statistic, ModuliSampler};
use crate::ward::{ward_residual, WardOptions};

pub const CACHE_ENV: &str = "ACRE_CACHE_DIR";

pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_TOLERANCE: u8 = 3;
pub const EXIT_CONSISTENCY: u8 = 4;

#[derive(Debug, Parser)]
#[command(name = "acre", version, about = "Almost-circular random normal matrix ensembles")]
pub struct Cli {
    /// Directory for all artifacts.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Worker threads (default: logical cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Artifact formats to write.
    #[arg(long, global = true, value_delimiter = ',', default_value = "csv,json")]
    pub format: Vec<Format>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Limiting 1-point function of one variant on an x grid.
    Limits {
        #[command(flatten)]
        variant: VariantArgs,
        #[arg(long, default_value = "-3:3:0.01", allow_hyphen_values = true)]
        grid: String,
    },
    /// Finite-n 1-point function against its limit.
    FiniteN {
        #[command(flatten)]
        ensemble: EnsembleArgs,
        #[arg(long, default_value = "-3:3:0.01", allow_hyphen_values = true)]
        grid: String,
    },
    /// Sup-errors against the limit along an n-ladder.
    Converge {
        #[command(flatten)]
        ensemble: EnsembleArgs,
        #[arg(long, default_value = "256,1024,4096")]
        ladder: String,
        #[arg(long, default_value = "-2:2:0.01", allow_hyphen_values = true)]
        grid: String,
        /// Points this close to a hard wall of the limit are skipped.
        #[arg(long, default_value_t = 0.05)]
        wall_margin: f64,
        /// Required bound on the last sup-error.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Exact laws of the rescaled extreme moduli against their limits.
    Extremes {
        #[command(flatten)]
        ensemble: EnsembleArgs,
        #[arg(long, default_value = "1000")]
        ladder: String,
        #[arg(long, default_value = "-2:4:0.05", allow_hyphen_values = true)]
        grid: String,
        /// Required bound on the last sup-distance.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Exact draws of the moduli.
    Sample {
        #[command(flatten)]
        ensemble: EnsembleArgs,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write every modulus of every trial.
        #[arg(long)]
        dump_moduli: bool,
        /// Fail when a KS distance to the exact law leaves the 99% band.
        #[arg(long)]
        check: bool,
    },
    /// Ward-equation residual field of a limit variant.
    Ward {
        #[command(flatten)]
        variant: VariantArgs,
        #[arg(long, default_value = "-0.2:0.2:0.1", allow_hyphen_values = true)]
        grid: String,
        #[arg(long, default_value = "-0.2:0.2:0.1", allow_hyphen_values = true)]
        ygrid: String,
        #[arg(long, default_value_t = 0.02)]
        h: f64,
        #[arg(long, default_value_t = 8.0)]
        cutoff: f64,
        /// Drop the confinement indicator terms (ablation).
        #[arg(long)]
        no_indicator: bool,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Check the potential's standing assumptions.
    Validate {
        #[command(flatten)]
        ensemble: EnsembleArgs,
    },
}

/// Ensemble from a config file plus flag overrides.
#[derive(Debug, Clone, Default, Args)]
pub struct EnsembleArgs {
    /// Flat key=value config file.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Extra key=value overrides, applied last.
    #[arg(long = "set")]
    pub set: Vec<String>,
    #[arg(long)]
    pub family: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub rho: Option<String>,
    /// free, interpolated, softhard, hard-annulus or hard-disk.
    #[arg(long)]
    pub bc: Option<String>,
    #[arg(long)]
    pub c1: Option<String>,
    #[arg(long)]
    pub c2: Option<String>,
    #[arg(long)]
    pub tau1: Option<String>,
    #[arg(long)]
    pub tau2: Option<String>,
    #[arg(long)]
    pub tau: Option<String>,
}

impl EnsembleArgs {
    pub fn config(&self) -> Result<SpecConfig> {
        let mut cfg = match &self.spec {
            Some(p) => SpecConfig::parse(
                &std::fs::read_to_string(p).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?,
            )?,
            None => SpecConfig::default(),
        };
        let flags = [
            ("family", self.family.clone()),
            ("n", self.n.map(|n| n.to_string())),
            ("rho", self.rho.clone()),
            ("bc.kind", self.bc.clone()),
            ("bc.c1", self.c1.clone()),
            ("bc.c2", self.c2.clone()),
            ("bc.tau1", self.tau1.clone()),
            ("bc.tau2", self.tau2.clone()),
            ("bc.tau", self.tau.clone()),
        ];
        for (k, v) in flags {
            if let Some(v) = v {
                cfg.set(&format!("{k}={v}"))?;
            }
        }
        for s in &self.set {
            cfg.set(s)?;
        }
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Variant {
    Free,
    Softhard,
    Interpolated,
    HardAnnulus,
    HardDiskOuter,
    HardDiskRescaled,
    GinibreSofthard,
    GinibreHard,
}

#[derive(Debug, Clone, Args)]
pub struct VariantArgs {
    #[arg(long, value_enum)]
    pub variant: Variant,
    #[arg(long)]
    pub rho: Option<String>,
    #[arg(long)]
    pub c1: Option<String>,
    #[arg(long)]
    pub c2: Option<String>,
    #[arg(long)]
    pub tau1: Option<String>,
    #[arg(long)]
    pub tau2: Option<String>,
    #[arg(long)]
    pub tau: Option<String>,
}

impl VariantArgs {
    pub fn name(&self) -> String {
        self.variant.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default()
    }

    pub fn profile(&self) -> Result<LimitProfile> {
        let get = |key: &str, v: &Option<String>| -> Result<f64> {
            let v = v.as_deref().ok_or_else(|| Error::Config(format!("--{key} is required for this variant")))?;
            parse_real(key, v)
        };
        let p = match self.variant {
            Variant::Free => LimitProfile::Free { rho: get("rho", &self.rho)? },
            Variant::Softhard => LimitProfile::SoftHard { rho: get("rho", &self.rho)? },
            Variant::Interpolated => LimitProfile::Interpolated {
                rho: get("rho", &self.rho)?,
                c1: get("c1", &self.c1)?,
                c2: get("c2", &self.c2)?,
            },
            Variant::HardAnnulus => LimitProfile::HardAnnulus {
                rho: get("rho", &self.rho)?,
                tau1: get("tau1", &self.tau1)?,
                tau2: get("tau2", &self.tau2)?,
            },
            Variant::HardDiskOuter => LimitProfile::HardDiskOuter { rho: get("rho", &self.rho)?, tau: get("tau", &self.tau)? },
            Variant::HardDiskRescaled => {
                LimitProfile::HardDiskRescaled { rho: get("rho", &self.rho)?, tau: get("tau", &self.tau)? }
            }
            Variant::GinibreSofthard => LimitProfile::GinibreSoftHard,
            Variant::GinibreHard => LimitProfile::GinibreHard,
        };
        p.check().map_err(|e| Error::Config(e.to_string()))?;
        Ok(p)
    }
}

/// Files produced by one run, written only after every computation finished.
#[derive(Debug, Default)]
pub struct Artifacts {
    files: Vec<(String, Vec<u8>)>,
    /// Failed checks; empty means success.
    pub failures: Vec<String>,
}

impl Artifacts {
    fn add(&mut self, name: impl Into<String>, body: impl Into<Vec<u8>>) {
        self.files.push((name.into(), body.into()));
    }

    pub fn names(&self) -> Vec<&str> {
        self.files.iter().map(|(n, _)| n.as_str()).collect()
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        for (name, body) in &self.files {
            write_atomic(&dir.join(name), body)?;
        }
        Ok(())
    }
}

fn sha_hex(text: &str) -> String {
    Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

fn json_text(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialise");
    s.push('\n');
    s
}

fn cache_dir() -> Option<PathBuf> {
    std::env::var_os(CACHE_ENV).filter(|v| !v.is_empty()).map(PathBuf::from)
}

fn load(spec: EnsembleSpec) -> Result<(Ensemble, NormTable)> {
    let ens = Ensemble::new(spec).map_err(|e| match e {
        Error::Domain(m) => Error::Config(m),
        e => e,
    })?;
    let table = norm_table_cached(&ens, cache_dir().as_deref())?;
    Ok((ens, table))
}

fn fmt_list<T: std::fmt::Display>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

/// Strictly decreasing sequence.
fn decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

/// Build every artifact for one command.
pub fn execute(cli: &Cli) -> Result<Artifacts> {
    let want = |f: Format| cli.format.contains(&f);
    let mut out = Artifacts::default();
    match &cli.command {
        Command::Limits { variant, grid } => {
            let profile = variant.profile()?;
            let xs = parse_grid(grid)?;
            let tag = profile.to_string();
            let mut t = CsvTable::new(&["x", "R"]).spec(sha_hex(&tag)).param("variant", &tag).param("grid", grid);
            let ys: Vec<f64> = xs.iter().map(|&x| profile.density(x)).collect();
            for (x, y) in xs.iter().zip(&ys) {
                t.push(vec![*x, *y]);
            }
            let stem = format!("limits-{}", variant.name());
            if want(Format::Csv) {
                out.add(format!("{stem}.csv"), t.render());
            }
            if want(Format::Json) {
                let v = json!({
                    "variant": tag,
                    "points": xs.len(),
                    "expected_mass": profile.expected_mass(),
                    "max_density": ys.iter().copied().fold(0.0, f64::max),
                });
                out.add(format!("{stem}.json"), json_text(&v));
            }
            if want(Format::Svg) {
                let style = SvgStyle { title: tag.clone(), x_label: "x".into(), y_label: "R(x)".into(), ..Default::default() };
                let svg = emit_svg(&[Series::new(tag, xs.into_iter().zip(ys).collect())], &style)?;
                out.add(format!("{stem}.svg"), svg);
            }
        }
        Command::FiniteN { ensemble, grid } => {
            let spec = ensemble.config()?.spec()?;
            let xs = parse_grid(grid)?;
            let (ens, table) = load(spec)?;
            let hash = ens.spec.hash();
            let canonical = ens.spec.canonical();
            let n = ens.n();
            let ctx = KernelContext::new(ens, table)?;
            let limit = ctx.limit();
            let fin = ctx.profile(&xs);
            let off_walls = ctx.sup_error(&xs, 0.05);
            let mut t = CsvTable::new(&["x", "R_n", "R_limit", "abs_error"])
                .spec(&hash)
                .param("n", n)
                .param("ensemble", &canonical)
                .param("limit", limit)
                .param("grid", grid);
            let mut sup: f64 = 0.0;
            let mut lim = Vec::with_capacity(xs.len());
            for (&x, &f) in xs.iter().zip(&fin) {
                let l = limit.density(x);
                sup = sup.max((f - l).abs());
                lim.push(l);
                t.push(vec![x, f, l, (f - l).abs()]);
            }
            if want(Format::Csv) {
                out.add("finite-n.csv", t.render());
            }
            if want(Format::Json) {
                let v = json!({"spec_hash": hash, "ensemble": canonical, "n": n, "limit": limit.to_string(), "sup_error": sup, "sup_error_off_walls": off_walls});
                out.add("finite-n.json", json_text(&v));
            }
            if want(Format::Svg) {
                let series = [
                    Series::new(format!("n={n}"), xs.iter().copied().zip(fin).collect()),
                    Series::new(limit.to_string(), xs.iter().copied().zip(lim).collect()),
                ];
                let style = SvgStyle { title: canonical, x_label: "x".into(), y_label: "R".into(), ..Default::default() };
                out.add("finite-n.svg", emit_svg(&series, &style)?);
            }
        }
        Command::Converge { ensemble, ladder, grid, wall_margin, tol } => {
            let cfg = ensemble.config()?;
            let ladder = parse_ladder(ladder)?;
            let xs = parse_grid(grid)?;
            let mut errors = Vec::with_capacity(ladder.len());
            let mut hashes = Vec::new();
            let mut limit = None;
            for &n in &ladder {
                let (ens, table) = load(cfg.spec_with_n(n)?)?;
                hashes.push(ens.spec.hash());
                let ctx = KernelContext::new(ens, table)?;
                limit = Some(ctx.limit());
                errors.push(ctx.sup_error(&xs, *wall_margin));
            }
            let limit = limit.expect("ladder is nonempty").to_string();
            let mut t = CsvTable::new(&["n", "sup_error"])
                .spec(sha_hex(&hashes.join(",")))
                .param("limit", &limit)
                .param("ladder", fmt_list(&ladder))
                .param("grid", grid)
                .param("wall_margin", wall_margin);
            for (n, e) in ladder.iter().zip(&errors) {
                t.push(vec![*n as f64, *e]);
            }
            if !decreasing(&errors) {
                out.failures.push(format!("sup-errors not strictly decreasing: {errors:?}"));
            }
            if let (Some(tol), Some(last)) = (tol, errors.last()) {
                if !(last <= tol) {
                    out.failures.push(format!("last sup-error {last} exceeds {tol}"));
                }
            }
            if want(Format::Csv) {
                out.add("converge.csv", t.render());
            }
            if want(Format::Json) {
                let v = json!({
                    "limit": limit,
                    "ladder": ladder,
                    "spec_hashes": hashes,
                    "sup_errors": errors,
                    "strictly_decreasing": decreasing(&errors),
                    "passed": out.failures.is_empty(),
                    "failures": out.failures,
                });
                out.add("converge.json", json_text(&v));
            }
        }
        Command::Extremes { ensemble, ladder, grid, tol } => {
            let cfg = ensemble.config()?;
            let ladder = parse_ladder(ladder)?;
            let xs = parse_grid(grid)?;
            let mut summary = Vec::new();
            let mut last = None;
            for &n in &ladder {
                let (ens, table) = load(cfg.spec_with_n(n)?)?;
                let sc = scaling_constants(&ens)?;
                let curve = gap_curve(&ens, &table, &xs)?;
                let reference = if sc.is_gumbel() { "gumbel" } else { "exp" };
                let mut t = CsvTable::new(&["x", "max_cdf", "min_cdf", "reference", "max_gap", "min_gap"])
                    .spec(ens.spec.hash())
                    .param("n", n)
                    .param("ensemble", ens.spec.canonical())
                    .param("reference", reference)
                    .param("grid", grid);
                for i in 0..xs.len() {
                    let r = curve.reference[i];
                    t.push(vec![xs[i], curve.max_cdf[i], curve.min_cdf[i], r, curve.max_cdf[i] - r, curve.min_cdf[i] - r]);
                }
                if want(Format::Csv) {
                    out.add(format!("extremes-n{n}.csv"), t.render());
                }
                if want(Format::Svg) {
                    let series = [
                        Series::new("max", xs.iter().copied().zip(curve.max_cdf.iter().copied()).collect()),
                        Series::new("min", xs.iter().copied().zip(curve.min_cdf.iter().copied()).collect()),
                        Series::new(reference, xs.iter().copied().zip(curve.reference.iter().copied()).collect()),
                    ];
                    let style = SvgStyle { title: ens.spec.canonical(), x_label: "x".into(), y_label: "CDF".into(), ..Default::default() };
                    out.add(format!("extremes-n{n}.svg"), emit_svg(&series, &style)?);
                }
                let exceed = if sc.is_gumbel() { Some(expected_exceedances(&ens, &table, 0.0)?) } else { None };
                let (dmax, dmin) = (curve.sup_distance_max(), curve.sup_distance_min());
                last = Some(dmax.max(dmin));
                summary.push(json!({
                    "n": n,
                    "spec_hash": ens.spec.hash(),
                    "sup_distance_max": dmax,
                    "sup_distance_min": dmin,
                    "expected_exceedances_at_0": exceed,
                }));
            }
            if let (Some(tol), Some(last)) = (tol, last) {
                if !(last <= *tol) {
                    out.failures.push(format!("last sup-distance {last} exceeds {tol}"));
                }
            }
            if want(Format::Json) {
                let v = json!({"ladder": ladder, "grid": grid, "per_n": summary, "passed": out.failures.is_empty(), "failures": out.failures});
                out.add("extremes.json", json_text(&v));
            }
        }
        Command::Sample { ensemble, trials, seed, dump_moduli, check } => {
            let spec = ensemble.config()?.spec()?;
            let (ens, table) = load(spec)?;
            let hash = ens.spec.hash();
            let canonical = ens.spec.canonical();
            let sampler = ModuliSampler::new(ens, table, *seed)?;
            let ext = sampler.extremes(*trials);
            let mut t = CsvTable::new(&["trial", "max", "min"])
                .spec(&hash)
                .param("ensemble", &canonical)
                .param("trials", trials)
                .param("seed", seed);
            for (k, (a, b)) in ext.iter().enumerate() {
                t.push(vec![k as f64, *a, *b]);
            }
            let mut maxs: Vec<f64> = ext.iter().map(|e| e.0).collect();
            let mut mins: Vec<f64> = ext.iter().map(|e| e.1).collect();
            maxs.sort_by(f64::total_cmp);
            mins.sort_by(f64::total_cmp);
            let ens = sampler.ensemble();
            let m = gap_sweep(ens, sampler.table(), &maxs)?;
            let l = gap_sweep(ens, sampler.table(), &mins)?;
            let ks_max = ks_statistic(&maxs, &m.max_cdf());
            let low: Vec<f64> = l.min_survival().iter().map(|s| 1.0 - s).collect();
            let ks_min = ks_statistic(&mins, &low);
            let band = ks_band(ext.len());
            if *check && !(ks_max <= band && ks_min <= band) {
                out.failures.push(format!("KS distances ({ks_max}, {ks_min}) exceed the 99% band {band}"));
            }
            if want(Format::Csv) {
                out.add("sample.csv", t.render());
                if *dump_moduli {
                    let mut d = CsvTable::new(&["trial", "degree", "modulus"]).spec(&hash).param("seed", seed);
                    for k in 0..*trials {
                        for (j, r) in sampler.sample_moduli(k).into_iter().enumerate() {
                            d.push(vec![k as f64, j as f64, r]);
                        }
                    }
                    out.add("moduli.csv", d.render());
                }
            }
            if want(Format::Json) {
                let v = json!({
                    "spec_hash": hash,
                    "ensemble": canonical,
                    "trials": trials,
                    "seed": seed,
                    "ks_max": ks_max,
                    "ks_min": ks_min,
                    "ks_band_99": band,
                    "passed": out.failures.is_empty(),
                    "failures": out.failures,
                });
                out.add("sample.json", json_text(&v));
            }
        }
        Command::Ward { variant, grid, ygrid, h, cutoff, no_indicator, tol } => {
            let profile = variant.profile()?;
            let xs = parse_grid(grid)?;
            let ys = parse_grid(ygrid)?;
            let points: Vec<(f64, f64)> = xs.iter().flat_map(|&x| ys.iter().map(move |&y| (x, y))).collect();
            let opts = WardOptions { step: *h, cutoff: *cutoff, include_indicator: !no_indicator };
            let report = ward_residual(&profile, &points, &opts)?;
            if let Some(tol) = tol {
                if !(report.max_abs <= *tol) {
                    out.failures.push(format!("max |residual| {} exceeds {tol}", report.max_abs));
                }
            }
            let tag = profile.to_string();
            let mut t = CsvTable::new(&["x", "y", "re_residual", "im_residual"])
                .spec(sha_hex(&tag))
                .param("variant", &tag)
                .param("h", h)
                .param("cutoff", cutoff)
                .param("include_indicator", !no_indicator);
            for p in &report.points {
                t.push(vec![p.x, p.y, p.re, p.im]);
            }
            if want(Format::Csv) {
                out.add("ward.csv", t.render());
            }
            if want(Format::Json) {
                let v = json!({
                    "variant": tag,
                    "step": report.step,
                    "cutoff": report.cutoff,
                    "quadrature_order": report.quadrature_order,
                    "include_indicator": report.include_indicator,
                    "evaluated": report.points.len(),
                    "excluded": report.excluded,
                    "max_abs": report.max_abs,
                    "passed": out.failures.is_empty(),
                    "failures": out.failures,
                });
                out.add("ward.json", json_text(&v));
            }
        }
        Command::Validate { ensemble } => {
            let spec = ensemble.config()?.spec()?;
            let report = validate(&spec);
            if !report.passed() {
                out.failures.push("potential violates a standing assumption".into());
            }
            let v = json!({
                "spec_hash": spec.hash(),
                "ensemble": spec.canonical(),
                "passed": report.passed(),
                "report": report,
            });
            out.add("validate.json", json_text(&v));
        }
    }
    Ok(out)
}


pub fn exit_code(e: &Error) -> u8 {
    match e.root() {
        Error::Consistency(_) | Error::Solver { .. } => EXIT_CONSISTENCY,
        _ => EXIT_CONFIG,
    }
}

/// Parse, compute, write; returns the process exit status.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_CONFIG) } else { ExitCode::SUCCESS };
        }
    };
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("acre: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    }
    let result = execute(&cli).and_then(|a| a.write(&cli.out).map(|_| a));
    match result {
        Ok(a) if a.failures.is_empty() => ExitCode::SUCCESS,
        Ok(a) => {
            eprintln!("{}", json!({"acre": VERSION, "passed": false, "failures": a.failures}));
            ExitCode::from(EXIT_TOLERANCE)
        }
        Err(e) => {
            eprintln!("acre: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
