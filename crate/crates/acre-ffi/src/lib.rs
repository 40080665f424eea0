//! C ABI over `acre`.
//!
//! Objects are opaque heap handles created by `*_new` functions and released
//! by the matching `*_free`. Every fallible call returns an [`AcreStatus`];
//! results go through out-pointers. The message of the last failure on the
//! calling thread is available from [`acre_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use acre::config::SpecConfig;
use acre::extremes::{gap_cdf_max, gap_cdf_min};
use acre::finitekernel::KernelContext;
use acre::limits::LimitProfile;
use acre::potentials::{BoundaryCondition, Ensemble, EnsembleSpec};
use acre::radialnorms::norm_table;
use acre::sampler::ModuliSampler;
use acre::ward::{rect_grid, ward_residual, WardOptions};
use acre::Error;
use num_complex::Complex64;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AcreStatus {
    Ok = 0,
    NullPointer = 1,
    Domain = 2,
    Unsupported = 3,
    Consistency = 4,
    Config = 5,
    Io = 6,
    Panic = 7,
    BufferTooSmall = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AcreBoundary {
    Free = 0,
    /// Parameters c1, c2; pass INFINITY to truncate a side.
    Interpolated = 1,
    /// Parameters tau1, tau2.
    HardAnnulus = 2,
    /// Parameter tau.
    HardDisk = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AcreVariant {
    Free = 0,
    SoftHard = 1,
    /// Parameters c1, c2.
    Interpolated = 2,
    /// Parameters tau1, tau2.
    HardAnnulus = 3,
    /// Parameter tau in `p1`.
    HardDiskOuter = 4,
    /// Parameter tau in `p1`.
    HardDiskRescaled = 5,
    GinibreSoftHard = 6,
    GinibreHard = 7,
}

/// Finite-n ensemble with its norm table and default zoom.
pub struct AcreEnsemble {
    ctx: KernelContext,
}

/// Limiting correlation structure.
pub struct AcreLimit {
    profile: LimitProfile,
}

/// Exact moduli sampler.
pub struct AcreSampler {
    inner: ModuliSampler,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn remember(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> AcreStatus {
    match e.root() {
        Error::Domain(_) => AcreStatus::Domain,
        Error::Unsupported(_) => AcreStatus::Unsupported,
        Error::Consistency(_) | Error::Solver { .. } => AcreStatus::Consistency,
        Error::Config(_) => AcreStatus::Config,
        Error::Io(_) => AcreStatus::Io,
        Error::Degree { .. } => AcreStatus::Consistency,
    }
}

/// Run `f`, translating errors and panics into status codes.
fn guard<F: FnOnce() -> Result<(), (AcreStatus, String)>>(f: F) -> AcreStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => AcreStatus::Ok,
        Ok(Err((s, msg))) => {
            remember(msg);
            s
        }
        Err(_) => {
            remember("panic inside acre".into());
            AcreStatus::Panic
        }
    }
}

fn lift<T>(r: acre::Result<T>) -> Result<T, (AcreStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null() -> (AcreStatus, String) {
    (AcreStatus::NullPointer, "null pointer argument".into())
}

unsafe fn out<'a, T>(p: *mut T) -> Result<&'a mut T, (AcreStatus, String)> {
    p.as_mut().ok_or_else(null)
}

unsafe fn handle<'a, T>(p: *const T) -> Result<&'a T, (AcreStatus, String)> {
    p.as_ref().ok_or_else(null)
}

fn build_ensemble(spec: EnsembleSpec) -> acre::Result<AcreEnsemble> {
    let ens = Ensemble::new(spec)?;
    let table = norm_table(&ens)?;
    Ok(AcreEnsemble { ctx: KernelContext::new(ens, table)? })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn acre_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copy the last error message of this thread into `buf` (NUL-terminated).
/// Returns the full message length in bytes, excluding the NUL; 0 if none.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn acre_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else {
            return 0;
        };
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let k = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr().cast(), buf, k);
            *buf.add(k) = 0;
        }
        bytes.len()
    })
}

/// Induced Ginibre ensemble of size n and width rho under a boundary condition.
///
/// # Safety
/// `handle_out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn acre_ensemble_new(
    n: usize,
    rho: f64,
    bc: AcreBoundary,
    p1: f64,
    p2: f64,
    handle_out: *mut *mut AcreEnsemble,
) -> AcreStatus {
    guard(|| {
        let slot = out(handle_out)?;
        let bc = match bc {
            AcreBoundary::Free => BoundaryCondition::Free,
            AcreBoundary::Interpolated => BoundaryCondition::Interpolated { c1: p1, c2: p2 },
            AcreBoundary::HardAnnulus => BoundaryCondition::HardAnnulus { tau1: p1, tau2: p2 },
            AcreBoundary::HardDisk => BoundaryCondition::HardDisk { tau: p1 },
        };
        let e = lift(EnsembleSpec::induced_ginibre(n, rho, bc).and_then(build_ensemble))?;
        *slot = Box::into_raw(Box::new(e));
        Ok(())
    })
}

/// Ensemble from the flat key=value config text.
///
/// # Safety
/// `text` must be a NUL-terminated string and `handle_out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn acre_ensemble_from_config(text: *const c_char, handle_out: *mut *mut AcreEnsemble) -> AcreStatus {
    guard(|| {
        let slot = out(handle_out)?;
        if text.is_null() {
            return Err(null());
        }
        let text = CStr::from_ptr(text)
            .to_str()
            .map_err(|_| (AcreStatus::Config, "config text is not UTF-8".to_string()))?;
        let e = lift(SpecConfig::parse(text).and_then(|c| c.spec()).and_then(build_ensemble))?;
        *slot = Box::into_raw(Box::new(e));
        Ok(())
    })
}

/// # Safety
/// `h` must be null or a handle from `acre_ensemble_new*`, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn acre_ensemble_free(h: *mut AcreEnsemble) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Natural log of the squared weighted norm of z^j.
///
/// # Safety
/// `h` and `value_out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn acre_ensemble_log_norm(h: *const AcreEnsemble, j: usize, value_out: *mut f64) -> AcreStatus {
    guard(|| {
        let e = handle(h)?;
        let slot = out(value_out)?;
        let t = e.ctx.table();
        *slot = *t
            .log_norm
            .get(j)
            .ok_or_else(|| (AcreStatus::Domain, format!("degree {j} out of range for n = {}", t.n)))?;
        Ok(())
    })
}

/// Rescaled 1-point function at z = x + iy.
///
/// # Safety
/// `h` and `value_out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn acre_ensemble_rho1(h: *const AcreEnsemble, x: f64, y: f64, value_out: *mut f64) -> AcreStatus {
    guard(|| {
        let e = handle(h)?;
        *out(value_out)? = e.ctx.rho1(Complex64::new(x, y));
        Ok(())
    })
}

/// P(max modulus ≤ r).
///
/// # Safety
/// `h` and `value_out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn acre_ensemble_max_cdf(h: *const AcreEnsemble, r: f64, value_out: *mut f64) -> AcreStatus {
    guard(|| {
        let e = handle(h)?;
        *out(value_out)? = lift(gap_cdf_max(e.ctx.ensemble(), e.ctx.table(), r))?;
        Ok(())
    })
}

/// P(min modulus ≥ r).
///
/// # Safety
/// `h` and `value_out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn acre_ensemble_min_survival(h: *const AcreEnsemble, r: f64, value_out: *mut f64) -> AcreStatus {
    guard(|| {
        let e = handle(h)?;
        *out(value_out)? = lift(gap_cdf_min(e.ctx.ensemble(), e.ctx.table(), r))?;
        Ok(())
    })
}

/// Limit variant; unused parameters are ignored.
///
/// # Safety
/// `handle_out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn acre_limit_new(
    variant: AcreVariant,
    rho: f64,
    p1: f64,
    p2: f64,
    handle_out: *mut *mut AcreLimit,
) -> AcreStatus {
    guard(|| {
        let slot = out(handle_out)?;
        let profile = match variant {
            AcreVariant::Free => LimitProfile::Free { rho },
            AcreVariant::SoftHard => LimitProfile::SoftHard { rho },
            AcreVariant::Interpolated => LimitProfile::Interpolated { rho, c1: p1, c2: p2 },
            AcreVariant::HardAnnulus => LimitProfile::HardAnnulus { rho, tau1: p1, tau2: p2 },
            AcreVariant::HardDiskOuter => LimitProfile::HardDiskOuter { rho, tau: p1 },
            AcreVariant::HardDiskRescaled => LimitProfile::HardDiskRescaled { rho, tau: p1 },
            AcreVariant::GinibreSoftHard => LimitProfile::GinibreSoftHard,
            AcreVariant::GinibreHard => LimitProfile::GinibreHard,
        };
        lift(profile.check())?;
        *slot = Box::into_raw(Box::new(AcreLimit { profile }));
        Ok(())
    })
}

/// # Safety
/// `h` must be null or a handle from `acre_limit_new`, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn acre_limit_free(h: *mut AcreLimit) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Limiting 1-point function at Re z = x.
///
/// # Safety
/// `h` and `value_out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn acre_limit_density(h: *const AcreLimit, x: f64, value_out: *mut f64) -> AcreStatus {
    guard(|| {
        *out(value_out)? = handle(h)?.profile.density(x);
        Ok(())
    })
}

/// Limiting kernel K(z, w).
///
/// # Safety
/// `h`, `re_out` and `im_out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn acre_limit_kernel(
    h: *const AcreLimit,
    z_re: f64,
    z_im: f64,
    w_re: f64,
    w_im: f64,
    re_out: *mut f64,
    im_out: *mut f64,
) -> AcreStatus {
    guard(|| {
        let p = &handle(h)?.profile;
        let k = p.kernel(Complex64::new(z_re, z_im), Complex64::new(w_re, w_im));
        *out(re_out)? = k.re;
        *out(im_out)? = k.im;
        Ok(())
    })
}

/// Max Ward residual over the square [lo, hi]² sampled with `spacing`.
///
/// # Safety
/// `h` and `value_out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn acre_limit_ward_max_residual(
    h: *const AcreLimit,
    lo: f64,
    hi: f64,
    spacing: f64,
    step: f64,
    cutoff: f64,
    value_out: *mut f64,
) -> AcreStatus {
    guard(|| {
        let p = &handle(h)?.profile;
        let slot = out(value_out)?;
        if !(spacing > 0.0 && hi >= lo) {
            return Err((AcreStatus::Config, "need lo ≤ hi and spacing > 0".into()));
        }
        let grid = rect_grid((lo, hi), (lo, hi), spacing);
        let opts = WardOptions { step, cutoff, include_indicator: true };
        *slot = lift(ward_residual(p, &grid, &opts))?.max_abs;
        Ok(())
    })
}

/// Sampler over a copy of the ensemble.
///
/// # Safety
/// `ens` and `handle_out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn acre_sampler_new(ens: *const AcreEnsemble, seed: u64, handle_out: *mut *mut AcreSampler) -> AcreStatus {
    guard(|| {
        let e = handle(ens)?;
        let slot = out(handle_out)?;
        let inner = lift(ModuliSampler::new(e.ctx.ensemble().clone(), e.ctx.table().clone(), seed))?;
        *slot = Box::into_raw(Box::new(AcreSampler { inner }));
        Ok(())
    })
}

/// # Safety
/// `h` must be null or a handle from `acre_sampler_new`, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn acre_sampler_free(h: *mut AcreSampler) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Max and min modulus of trials 0..trials into two caller buffers.
///
/// # Safety
/// `h` must be valid; `max_out` and `min_out` must each hold `trials` doubles.
#[no_mangle]
pub unsafe extern "C" fn acre_sampler_extremes(
    h: *const AcreSampler,
    trials: u64,
    max_out: *mut f64,
    min_out: *mut f64,
) -> AcreStatus {
    guard(|| {
        let s = handle(h)?;
        if max_out.is_null() || min_out.is_null() {
            return Err(null());
        }
        for (k, (a, b)) in s.inner.extremes(trials).into_iter().enumerate() {
            *max_out.add(k) = a;
            *min_out.add(k) = b;
        }
        Ok(())
    })
}

/// All n moduli of one trial into a caller buffer of `len` doubles.
///
/// # Safety
/// `h` must be valid; `moduli_out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn acre_sampler_moduli(
    h: *const AcreSampler,
    trial: u64,
    moduli_out: *mut f64,
    len: usize,
) -> AcreStatus {
    guard(|| {
        let s = handle(h)?;
        let n = s.inner.ensemble().n();
        if moduli_out.is_null() {
            return Err(null());
        }
        if len < n {
            return Err((AcreStatus::BufferTooSmall, format!("buffer holds {len} values, need {n}")));
        }
        let v = s.inner.sample_moduli(trial);
        ptr::copy_nonoverlapping(v.as_ptr(), moduli_out, n);
        Ok(())
    })
}
