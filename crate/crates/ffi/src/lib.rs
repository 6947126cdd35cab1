//! C ABI over the `dmim` crate.
//!
//! Distributions and empirical CDFs are opaque heap handles created by the
//! `*_new` functions and released with the matching `*_free`. Every fallible
//! call returns a [`DmimStatus`] and writes its result through an out
//! pointer, which is left untouched on failure. The message for the last
//! error on the calling thread is available from [`dmim_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, c_void, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use dmim::gof::{self, GofError};
use dmim::measures::{self, MeasureError};
use dmim::montecarlo::{self, SimError};
use dmim::quadrature::QuadratureError;
use dmim::{DistributionSpec, EmpiricalCdf, Interval, Quadrature};

/// Result codes. Zero is success.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DmimStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    NotNormalized = 3,
    MissingVariance = 4,
    NonConvergent = 5,
    Unsupported = 6,
    Panic = 7,
}

/// Opaque distribution handle.
pub struct DmimDistribution {
    spec: DistributionSpec,
}

/// Opaque empirical CDF handle.
pub struct DmimEcdf {
    ecdf: EmpiricalCdf,
}

/// Sample-size plan.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct DmimPlan {
    pub n: u64,
    pub d: f64,
    pub sigma: f64,
    pub epsilon: f64,
    pub beta: f64,
    /// Closed-form bound on `P{D_n > d}` at the planned `(n, d)`.
    pub tail_bound: f64,
}

/// Density callback for custom distributions.
pub type DmimDensityFn = Option<unsafe extern "C" fn(x: f64, user_data: *mut c_void) -> f64>;

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

trait Status {
    fn status(&self) -> DmimStatus;
}

impl Status for QuadratureError {
    fn status(&self) -> DmimStatus {
        match self {
            QuadratureError::NonConvergent { .. } | QuadratureError::NonFinite { .. } => DmimStatus::NonConvergent,
            _ => DmimStatus::InvalidArgument,
        }
    }
}

impl Status for MeasureError {
    fn status(&self) -> DmimStatus {
        match self {
            MeasureError::NotNormalized { .. } => DmimStatus::NotNormalized,
            MeasureError::MissingVariance => DmimStatus::MissingVariance,
            MeasureError::SlowConvergence { .. } | MeasureError::DivergentIntegral { .. } => DmimStatus::NonConvergent,
            MeasureError::Quadrature(q) => q.status(),
            _ => DmimStatus::InvalidArgument,
        }
    }
}

impl Status for GofError {
    fn status(&self) -> DmimStatus {
        match self {
            GofError::Measure(m) => m.status(),
            _ => DmimStatus::InvalidArgument,
        }
    }
}

impl Status for SimError {
    fn status(&self) -> DmimStatus {
        match self {
            SimError::UnsupportedFamily => DmimStatus::Unsupported,
            SimError::Gof(g) => g.status(),
            SimError::Measure(m) => m.status(),
            _ => DmimStatus::InvalidArgument,
        }
    }
}

/// Runs `f`, recording any error or panic for `dmim_last_error`.
fn run<E: Status + std::fmt::Display>(f: impl FnOnce() -> Result<(), E>) -> DmimStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DmimStatus::Ok,
        Ok(Err(e)) => {
            set_error(&e.to_string());
            e.status()
        }
        Err(_) => {
            set_error("internal panic");
            DmimStatus::Panic
        }
    }
}

/// Like [`run`], writing the value to `out` on success.
fn guard<T, E: Status + std::fmt::Display>(out: *mut T, f: impl FnOnce() -> Result<T, E>) -> DmimStatus {
    if out.is_null() {
        set_error("output pointer is null");
        return DmimStatus::NullPointer;
    }
    // SAFETY: checked non-null above; the caller guarantees validity.
    run(|| f().map(|v| unsafe { out.write(v) }))
}

fn new_handle(
    out: *mut *mut DmimDistribution,
    f: impl FnOnce() -> Result<DistributionSpec, MeasureError>,
) -> DmimStatus {
    guard(out, || f().map(|spec| Box::into_raw(Box::new(DmimDistribution { spec }))))
}

unsafe fn spec_ref<'a>(dist: *const DmimDistribution) -> Option<&'a DistributionSpec> {
    // SAFETY: the caller passes a live handle or null.
    unsafe { dist.as_ref() }.map(|d| &d.spec)
}

macro_rules! require {
    ($ptr:expr) => {
        match $ptr {
            Some(v) => v,
            None => {
                set_error("handle is null");
                return DmimStatus::NullPointer;
            }
        }
    };
}

/// Message for the last failed call on this thread. Valid until the next
/// failing call on the same thread; never null.
#[no_mangle]
pub extern "C" fn dmim_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

#[no_mangle]
pub extern "C" fn dmim_uniform_new(a: f64, b: f64, out: *mut *mut DmimDistribution) -> DmimStatus {
    new_handle(out, || DistributionSpec::uniform(a, b))
}

#[no_mangle]
pub extern "C" fn dmim_normal_new(mu: f64, sigma: f64, out: *mut *mut DmimDistribution) -> DmimStatus {
    new_handle(out, || DistributionSpec::normal(mu, sigma))
}

#[no_mangle]
pub extern "C" fn dmim_exponential_new(lambda: f64, out: *mut *mut DmimDistribution) -> DmimStatus {
    new_handle(out, || DistributionSpec::exponential(lambda))
}

struct Callback {
    f: unsafe extern "C" fn(f64, *mut c_void) -> f64,
    user_data: *mut c_void,
}

// SAFETY: the caller promises the callback and user_data may be used from
// any thread for the lifetime of the handle.
unsafe impl Send for Callback {}
unsafe impl Sync for Callback {}

impl Callback {
    fn call(&self, x: f64) -> f64 {
        // SAFETY: forwarded caller contract of dmim_custom_new.
        unsafe { (self.f)(x, self.user_data) }
    }
}

/// Custom density on `[lower, upper]` (either may be infinite). `mean` and
/// `variance` may be NaN when unknown. The callback must be thread-safe and
/// `user_data` must outlive the handle.
///
/// # Safety
/// `density` must be callable with any `x` in the support and `user_data`.
#[no_mangle]
pub unsafe extern "C" fn dmim_custom_new(
    density: DmimDensityFn,
    user_data: *mut c_void,
    lower: f64,
    upper: f64,
    mean: f64,
    variance: f64,
    out: *mut *mut DmimDistribution,
) -> DmimStatus {
    let Some(f) = density else {
        set_error("density callback is null");
        return DmimStatus::NullPointer;
    };
    let cb = Callback { f, user_data };
    let opt = |v: f64| if v.is_nan() { None } else { Some(v) };
    new_handle(out, || {
        let support = Interval::new(lower, upper)?;
        DistributionSpec::custom(move |x| cb.call(x), support, opt(mean), opt(variance))
    })
}

/// # Safety
/// `dist` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dmim_distribution_free(dist: *mut DmimDistribution) {
    if !dist.is_null() {
        // SAFETY: created by Box::into_raw in new_handle.
        drop(unsafe { Box::from_raw(dist) });
    }
}

/// # Safety
/// `dist` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dmim_density(dist: *const DmimDistribution, x: f64, out: *mut f64) -> DmimStatus {
    let spec = require!(unsafe { spec_ref(dist) });
    guard(out, || Ok::<_, MeasureError>(spec.density(x)))
}

/// # Safety
/// `dist` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dmim_cdf(dist: *const DmimDistribution, x: f64, out: *mut f64) -> DmimStatus {
    let spec = require!(unsafe { spec_ref(dist) });
    guard(out, || spec.cdf(x).ok_or(SimError::UnsupportedFamily))
}

/// DMIM `∫ f e^{-f}`.
///
/// # Safety
/// `dist` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dmim_value(dist: *const DmimDistribution, out: *mut f64) -> DmimStatus {
    let spec = require!(unsafe { spec_ref(dist) });
    guard(out, || measures::dmim(spec))
}

/// DMIM by adaptive quadrature with the given tolerances.
///
/// # Safety
/// `dist` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dmim_value_quadrature(
    dist: *const DmimDistribution,
    abs_tol: f64,
    rel_tol: f64,
    out: *mut f64,
) -> DmimStatus {
    let spec = require!(unsafe { spec_ref(dist) });
    guard(out, || measures::dmim_by_quadrature(spec, &Quadrature::new(abs_tol, rel_tol)))
}

/// # Safety
/// `dist` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dmim_variance(dist: *const DmimDistribution, out: *mut f64) -> DmimStatus {
    let spec = require!(unsafe { spec_ref(dist) });
    guard(out, || spec.variance())
}

/// Rényi entropy of order `alpha` (> 0, ≠ 1).
///
/// # Safety
/// `dist` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dmim_renyi_entropy(dist: *const DmimDistribution, alpha: f64, out: *mut f64) -> DmimStatus {
    let spec = require!(unsafe { spec_ref(dist) });
    guard(out, || measures::renyi_entropy(spec, alpha))
}

/// `m`-term Rényi partial sum; `bound` receives its truncation certificate.
///
/// # Safety
/// `dist` must be a live handle; `out` and `bound` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dmim_renyi_series(
    dist: *const DmimDistribution,
    m: usize,
    out: *mut f64,
    bound: *mut f64,
) -> DmimStatus {
    let spec = require!(unsafe { spec_ref(dist) });
    if bound.is_null() {
        set_error("output pointer is null");
        return DmimStatus::NullPointer;
    }
    let mut b = 0.0;
    let status = guard(out, || {
        measures::dmim_via_renyi_series(spec, m).map(|r| {
            b = r.truncation_bound;
            r.value
        })
    });
    if status == DmimStatus::Ok {
        // SAFETY: checked non-null above.
        unsafe { bound.write(b) };
    }
    status
}

/// Normal DMIM by power series; `bound` receives the truncation bound and
/// may be null.
///
/// # Safety
/// `out` must be writable; `bound` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn dmim_normal_series(sigma: f64, tol: f64, out: *mut f64, bound: *mut f64) -> DmimStatus {
    let mut b = 0.0;
    let status = guard(out, || {
        measures::dmim_normal_series(sigma, tol).map(|r| {
            b = r.truncation_bound;
            r.value
        })
    });
    if status == DmimStatus::Ok && !bound.is_null() {
        // SAFETY: non-null, caller guarantees writability.
        unsafe { bound.write(b) };
    }
    status
}

/// Builds an empirical CDF from `len` samples (copied).
///
/// # Safety
/// `samples` must point to `len` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dmim_ecdf_new(samples: *const f64, len: usize, out: *mut *mut DmimEcdf) -> DmimStatus {
    if samples.is_null() && len > 0 {
        set_error("sample pointer is null");
        return DmimStatus::NullPointer;
    }
    let slice = if len == 0 {
        &[][..]
    } else {
        // SAFETY: caller contract.
        unsafe { std::slice::from_raw_parts(samples, len) }
    };
    guard(out, || EmpiricalCdf::new(slice).map(|ecdf| Box::into_raw(Box::new(DmimEcdf { ecdf }))))
}

/// # Safety
/// `ecdf` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dmim_ecdf_free(ecdf: *mut DmimEcdf) {
    if !ecdf.is_null() {
        // SAFETY: created by Box::into_raw in dmim_ecdf_new.
        drop(unsafe { Box::from_raw(ecdf) });
    }
}

/// # Safety
/// `ecdf` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dmim_ecdf_evaluate(ecdf: *const DmimEcdf, x: f64, out: *mut f64) -> DmimStatus {
    // SAFETY: caller contract.
    let e = require!(unsafe { ecdf.as_ref() });
    guard(out, || Ok::<_, GofError>(e.ecdf.evaluate(x)))
}

/// KS statistic of the sample against the distribution's CDF. Custom
/// distributions are not supported.
///
/// # Safety
/// Both handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dmim_ks_statistic(
    ecdf: *const DmimEcdf,
    dist: *const DmimDistribution,
    out: *mut f64,
) -> DmimStatus {
    // SAFETY: caller contract.
    let e = require!(unsafe { ecdf.as_ref() });
    let spec = require!(unsafe { spec_ref(dist) });
    if spec.cdf(0.0).is_none() {
        set_error("custom distributions have no closed-form CDF");
        return DmimStatus::Unsupported;
    }
    guard(out, || e.ecdf.ks_statistic(|x| spec.cdf(x).unwrap_or(f64::NAN)))
}

/// Asymptotic Kolmogorov tail `P{D_n > d}`; `k_max` terms (0 = default).
#[no_mangle]
pub extern "C" fn dmim_ks_tail_series(n: u64, d: f64, k_max: usize) -> f64 {
    let k = if k_max == 0 { gof::DEFAULT_KS_TERMS } else { k_max };
    gof::ks_tail_series(n, d, k)
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dmim_ks_tail_bound(n: u64, d: f64, out: *mut f64) -> DmimStatus {
    guard(out, || gof::ks_tail_upper_bound(n, d))
}

/// Samples needed for DMIM deviation `epsilon`. Pass NaN for `l_x` to get
/// the distribution-free count.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dmim_required_samples(epsilon: f64, sigma: f64, l_x: f64, out: *mut u64) -> DmimStatus {
    let l = if l_x.is_nan() { None } else { Some(l_x) };
    guard(out, || gof::required_samples(epsilon, sigma, l))
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dmim_d_from(epsilon: f64, beta: f64, sigma: f64, out: *mut f64) -> DmimStatus {
    guard(out, || gof::d_from(epsilon, beta, sigma))
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dmim_epsilon_from(d: f64, beta: f64, sigma: f64, out: *mut f64) -> DmimStatus {
    guard(out, || gof::epsilon_from(d, beta, sigma))
}

/// Confidence level for `(d, ε, σ)`. `achievable` (may be null) is set to 1
/// when the result lies in the range where the relation is valid.
///
/// # Safety
/// `out` must be writable; `achievable` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn dmim_beta_from(
    d: f64,
    epsilon: f64,
    sigma: f64,
    out: *mut f64,
    achievable: *mut i32,
) -> DmimStatus {
    let mut ok = false;
    let status = guard(out, || {
        gof::beta_from(d, epsilon, sigma).map(|b| {
            ok = b.achievable;
            b.beta
        })
    });
    if status == DmimStatus::Ok && !achievable.is_null() {
        // SAFETY: non-null, caller guarantees writability.
        unsafe { achievable.write(i32::from(ok)) };
    }
    status
}

/// # Safety
/// `dist` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dmim_make_plan(
    dist: *const DmimDistribution,
    epsilon: f64,
    beta: f64,
    out: *mut DmimPlan,
) -> DmimStatus {
    let spec = require!(unsafe { spec_ref(dist) });
    guard(out, || {
        let p = gof::make_plan(spec, epsilon, beta)?;
        Ok::<_, GofError>(DmimPlan {
            n: p.n,
            d: p.d,
            sigma: p.sigma,
            epsilon: p.epsilon,
            beta: p.beta,
            tail_bound: p.tail_bound()?,
        })
    })
}

/// Fills `buf` with `len` draws. The same `(distribution, len, seed)` gives
/// the same values on every platform.
///
/// # Safety
/// `dist` must be a live handle; `buf` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn dmim_sample(
    dist: *const DmimDistribution,
    seed: u64,
    buf: *mut f64,
    len: usize,
) -> DmimStatus {
    let spec = require!(unsafe { spec_ref(dist) });
    if buf.is_null() && len > 0 {
        set_error("buffer is null");
        return DmimStatus::NullPointer;
    }
    run(|| {
        let draws = montecarlo::sample(spec, len, seed)?;
        if len > 0 {
            // SAFETY: caller contract; lengths match.
            unsafe { ptr::copy_nonoverlapping(draws.as_ptr(), buf, len) };
        }
        Ok::<_, SimError>(())
    })
}
