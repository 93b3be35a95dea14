//! C interface to laser-core.
//!
//! Objects are opaque handles created by `*_new`/`*_load`/`*_simulate`
//! functions and released with the matching `*_free`. Every fallible call
//! returns a `LaserStatus`; on failure `laser_last_error()` describes the
//! most recent error on the calling thread. Outputs are written through
//! pointer arguments only on success.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use laser_core::custom::{
    macro_inference, reb_inference, AdjustMethod, CustomConfig, Customizer, EbConfig, InferenceReport, NullMethod,
};
use laser_core::data::{load_csv, simulate_funnel, CsvSchema, Dataset, FunnelConfig};
use laser_core::engines::{bh_procedure, Bh, GlobalEngine, Locfdr};
use laser_core::regress::Selector;
use laser_core::{Error, ErrorClass};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LaserStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Data = 3,
    Numerical = 4,
    Panic = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LaserSelector {
    Bic = 0,
    Aic = 1,
    None = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LaserAdjust {
    None = 0,
    Ols = 1,
    Smoother = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LaserNullMethod {
    Laser = 0,
    Quantile = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LaserEngine {
    Locfdr = 0,
    Bh = 1,
}

/// Settings for `laser_customizer_new`. Start from `laser_options_default()`.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct LaserOptions {
    pub m: usize,
    pub k: usize,
    pub selector: LaserSelector,
    pub interactions: bool,
    pub adjust: LaserAdjust,
    pub null_method: LaserNullMethod,
    pub bags: usize,
    /// 0 uses N.
    pub laser_size: usize,
    pub seed: u64,
}

/// Opaque dataset.
pub struct LaserDataset(Dataset);

/// Opaque fitted customizer (relevance model plus configuration).
pub struct LaserCustomizer(Customizer);

/// Opaque macro inference result.
pub struct LaserReport(InferenceReport);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> LaserStatus {
    match e.class() {
        ErrorClass::Usage => LaserStatus::InvalidArgument,
        ErrorClass::Data => LaserStatus::Data,
        ErrorClass::Numerical => LaserStatus::Numerical,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (LaserStatus, String)>) -> LaserStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => LaserStatus::Ok,
        Ok(Err((s, msg))) => {
            set_error(msg);
            s
        }
        Err(_) => {
            set_error("internal panic".into());
            LaserStatus::Panic
        }
    }
}

trait Lift<T> {
    fn lift(self) -> Result<T, (LaserStatus, String)>;
}

impl<T> Lift<T> for laser_core::Result<T> {
    fn lift(self) -> Result<T, (LaserStatus, String)> {
        self.map_err(|e| (status_of(&e), e.to_string()))
    }
}

fn null_arg(name: &str) -> (LaserStatus, String) {
    (LaserStatus::NullPointer, format!("{name} is null"))
}

fn invalid(msg: impl Into<String>) -> (LaserStatus, String) {
    (LaserStatus::InvalidArgument, msg.into())
}

unsafe fn slice<'a, T>(p: *const T, n: usize, name: &str) -> Result<&'a [T], (LaserStatus, String)> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null_arg(name));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

unsafe fn slice_mut<'a, T>(p: *mut T, n: usize, name: &str) -> Result<&'a mut [T], (LaserStatus, String)> {
    if n == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null_arg(name));
    }
    Ok(std::slice::from_raw_parts_mut(p, n))
}

unsafe fn reference<'a, T>(p: *const T, name: &str) -> Result<&'a T, (LaserStatus, String)> {
    p.as_ref().ok_or_else(|| null_arg(name))
}

unsafe fn put<T>(p: *mut T, v: T, name: &str) -> Result<(), (LaserStatus, String)> {
    if p.is_null() {
        return Err(null_arg(name));
    }
    p.write(v);
    Ok(())
}

unsafe fn string(p: *const c_char, name: &str) -> Result<String, (LaserStatus, String)> {
    if p.is_null() {
        return Err(null_arg(name));
    }
    CStr::from_ptr(p).to_str().map(str::to_string).map_err(|_| invalid(format!("{name} is not valid UTF-8")))
}

/// Message for the most recent failure on this thread, or null. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn laser_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

#[no_mangle]
pub extern "C" fn laser_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Dataset from row-major covariates `x` (`n * p` values) and scores `z`.
///
/// # Safety
/// `x` must point to `n * p` doubles, `z` to `n` doubles, `out` to writable
/// storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn laser_dataset_new(
    x: *const f64,
    n: usize,
    p: usize,
    z: *const f64,
    out: *mut *mut LaserDataset,
) -> LaserStatus {
    guard(|| {
        let len = n.checked_mul(p).ok_or_else(|| invalid("n * p overflows"))?;
        let x = slice(x, len, "x")?.to_vec();
        let z = slice(z, n, "z")?.to_vec();
        let d = Dataset::new(x, p, z).lift()?;
        put(out, Box::into_raw(Box::new(LaserDataset(d))), "out")
    })
}

/// Reads a CSV. `z_column` may be null for the default `z`.
///
/// # Safety
/// `path` and `z_column` (if not null) must be NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn laser_dataset_load_csv(
    path: *const c_char,
    z_column: *const c_char,
    out: *mut *mut LaserDataset,
) -> LaserStatus {
    guard(|| {
        let path = string(path, "path")?;
        let schema =
            if z_column.is_null() { CsvSchema::default() } else { CsvSchema::with_z(&string(z_column, "z_column")?) };
        let d = load_csv(Path::new(&path), &schema).lift()?;
        put(out, Box::into_raw(Box::new(LaserDataset(d))), "out")
    })
}

/// Funnel simulation with default settings.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn laser_dataset_simulate_funnel(seed: u64, out: *mut *mut LaserDataset) -> LaserStatus {
    guard(|| {
        let d = simulate_funnel(&FunnelConfig::with_seed(seed)).lift()?;
        put(out, Box::into_raw(Box::new(LaserDataset(d))), "out")
    })
}

/// Number of rows, 0 for null.
///
/// # Safety
/// `data` must be null or a live dataset handle.
#[no_mangle]
pub unsafe extern "C" fn laser_dataset_len(data: *const LaserDataset) -> usize {
    data.as_ref().map_or(0, |d| d.0.len())
}

/// Number of covariates, 0 for null.
///
/// # Safety
/// `data` must be null or a live dataset handle.
#[no_mangle]
pub unsafe extern "C" fn laser_dataset_covariates(data: *const LaserDataset) -> usize {
    data.as_ref().map_or(0, |d| d.0.p())
}

/// # Safety
/// `data` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn laser_dataset_free(data: *mut LaserDataset) {
    if !data.is_null() {
        drop(Box::from_raw(data));
    }
}

#[no_mangle]
pub extern "C" fn laser_options_default() -> LaserOptions {
    let c = CustomConfig::default();
    LaserOptions {
        m: c.relevance.m,
        k: c.relevance.k,
        selector: LaserSelector::Bic,
        interactions: c.relevance.interactions,
        adjust: LaserAdjust::None,
        null_method: LaserNullMethod::Laser,
        bags: c.bags,
        laser_size: 0,
        seed: 0,
    }
}

fn config_from(o: &LaserOptions) -> CustomConfig {
    let mut c = CustomConfig::with_seed(o.seed);
    c.relevance.m = o.m;
    c.relevance.k = o.k;
    c.relevance.selector = match o.selector {
        LaserSelector::Bic => Selector::Bic,
        LaserSelector::Aic => Selector::Aic,
        LaserSelector::None => Selector::None,
    };
    c.relevance.interactions = o.interactions;
    c.adjust = match o.adjust {
        LaserAdjust::None => None,
        LaserAdjust::Ols => Some(AdjustMethod::Ols),
        LaserAdjust::Smoother => Some(AdjustMethod::Smoother),
    };
    c.null_method = match o.null_method {
        LaserNullMethod::Laser => NullMethod::Laser,
        LaserNullMethod::Quantile => NullMethod::Quantile,
    };
    c.bags = o.bags;
    c.laser_size = (o.laser_size > 0).then_some(o.laser_size);
    c
}

/// Fits the relevance model. `options` may be null for defaults.
///
/// # Safety
/// `data` must be a live dataset handle; `options` null or valid.
#[no_mangle]
pub unsafe extern "C" fn laser_customizer_new(
    data: *const LaserDataset,
    options: *const LaserOptions,
    out: *mut *mut LaserCustomizer,
) -> LaserStatus {
    guard(|| {
        let d = reference(data, "data")?;
        let o = options.as_ref().copied().unwrap_or_else(|| laser_options_default());
        let c = config_from(&o);
        c.relevance.validate().lift()?;
        let cz = Customizer::new(&d.0, &c).lift()?;
        put(out, Box::into_raw(Box::new(LaserCustomizer(cz))), "out")
    })
}

/// # Safety
/// `cz` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn laser_customizer_free(cz: *mut LaserCustomizer) {
    if !cz.is_null() {
        drop(Box::from_raw(cz));
    }
}

unsafe fn profile<'a>(
    cz: *const LaserCustomizer,
    x: *const f64,
    p: usize,
) -> Result<(&'a Customizer, &'a [f64]), (LaserStatus, String)> {
    let cz = &reference(cz, "customizer")?.0;
    if p != cz.data().p() {
        return Err(invalid(format!("profile has {p} values, data has {} covariates", cz.data().p())));
    }
    Ok((cz, slice(x, p, "x")?))
}

/// CUST index at profile `x` and whether the relevance there is flat.
///
/// # Safety
/// `x` must point to `p` doubles; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn laser_relevance(
    cz: *const LaserCustomizer,
    x: *const f64,
    p: usize,
    out_cust: *mut f64,
    out_flat: *mut bool,
) -> LaserStatus {
    guard(|| {
        let (cz, x) = profile(cz, x, p)?;
        let local = cz.local(x).lift()?;
        let (cust, flat) = local.map_or((0.0, true), |l| (l.cust(), l.is_flat()));
        put(out_cust, cust, "out_cust")?;
        put(out_flat, flat, "out_flat")
    })
}

/// Bag-averaged customized local fdr of score `z` at profile `x`.
///
/// # Safety
/// `x` must point to `p` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn laser_customized_fdr(
    cz: *const LaserCustomizer,
    x: *const f64,
    p: usize,
    z: f64,
    out: *mut f64,
) -> LaserStatus {
    guard(|| {
        let (cz, x) = profile(cz, x, p)?;
        if !z.is_finite() {
            return Err(invalid("z must be finite"));
        }
        let f = cz.customized_fdr(x).lift()?;
        put(out, f.fdr_at(z), "out")
    })
}

/// Relevant null `(mu0, sigma0, pi0)` at profile `x`.
///
/// # Safety
/// `x` must point to `p` doubles; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn laser_relevant_null(
    cz: *const LaserCustomizer,
    x: *const f64,
    p: usize,
    method: LaserNullMethod,
    out_mu0: *mut f64,
    out_sigma0: *mut f64,
    out_pi0: *mut f64,
) -> LaserStatus {
    guard(|| {
        let (cz, x) = profile(cz, x, p)?;
        let m = match method {
            LaserNullMethod::Laser => NullMethod::Laser,
            LaserNullMethod::Quantile => NullMethod::Quantile,
        };
        let n = cz.relevant_null(x, m).lift()?;
        put(out_mu0, n.mu0, "out_mu0")?;
        put(out_sigma0, n.sigma0, "out_sigma0")?;
        put(out_pi0, n.pi0, "out_pi0")
    })
}

/// Writes up to `cap` LASER draws (z-domain) for bag `bag` at `x` and the
/// full sample size to `out_len`. Pass `cap = 0` to query the size.
///
/// # Safety
/// `x` must point to `p` doubles; `out` to `cap` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn laser_generate(
    cz: *const LaserCustomizer,
    x: *const f64,
    p: usize,
    bag: usize,
    out: *mut f64,
    cap: usize,
    out_len: *mut usize,
) -> LaserStatus {
    guard(|| {
        let (cz, x) = profile(cz, x, p)?;
        let l = cz.laser(x, bag).lift()?;
        let shift = cz.shift(x);
        let dst = slice_mut(out, cap.min(l.len()), "out")?;
        for (d, s) in dst.iter_mut().zip(&l.samples) {
            *d = s + shift;
        }
        put(out_len, l.len(), "out_len")
    })
}

/// Customized inference over every case.
///
/// # Safety
/// `cz` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn laser_macro(
    cz: *const LaserCustomizer,
    engine: LaserEngine,
    alpha: f64,
    out: *mut *mut LaserReport,
) -> LaserStatus {
    guard(|| {
        let cz = &reference(cz, "customizer")?.0;
        let window = cz.config().locfdr.window;
        let eng: Box<dyn GlobalEngine> = match engine {
            LaserEngine::Locfdr => Box::new(Locfdr { config: cz.config().locfdr }),
            LaserEngine::Bh => Box::new(Bh { window }),
        };
        let r = macro_inference(cz, eng.as_ref(), alpha).lift()?;
        put(out, Box::into_raw(Box::new(LaserReport(r))), "out")
    })
}

/// Number of cases, 0 for null.
///
/// # Safety
/// `r` must be null or a live report handle.
#[no_mangle]
pub unsafe extern "C" fn laser_report_len(r: *const LaserReport) -> usize {
    r.as_ref().map_or(0, |r| r.0.cases.len())
}

/// Number of significant cases, 0 for null.
///
/// # Safety
/// `r` must be null or a live report handle.
#[no_mangle]
pub unsafe extern "C" fn laser_report_rejections(r: *const LaserReport) -> usize {
    r.as_ref().map_or(0, |r| r.0.rejections)
}

/// Per-case fdr (q-values for BH), DPS and significance flags in input
/// order. Each output array needs `laser_report_len` slots; any may be null.
///
/// # Safety
/// Non-null outputs must have room for `n` values.
#[no_mangle]
pub unsafe extern "C" fn laser_report_cases(
    r: *const LaserReport,
    n: usize,
    out_fdr: *mut f64,
    out_dps: *mut f64,
    out_significant: *mut u8,
) -> LaserStatus {
    guard(|| {
        let r = &reference(r, "report")?.0;
        if n != r.cases.len() {
            return Err(invalid(format!("report has {} cases, buffer has {n}", r.cases.len())));
        }
        if !out_fdr.is_null() {
            for (d, c) in slice_mut(out_fdr, n, "out_fdr")?.iter_mut().zip(&r.cases) {
                *d = c.fdr;
            }
        }
        if !out_dps.is_null() {
            for (d, c) in slice_mut(out_dps, n, "out_dps")?.iter_mut().zip(&r.cases) {
                *d = c.dps;
            }
        }
        if !out_significant.is_null() {
            for (d, c) in slice_mut(out_significant, n, "out_significant")?.iter_mut().zip(&r.cases) {
                *d = c.significant as u8;
            }
        }
        Ok(())
    })
}

/// # Safety
/// `r` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn laser_report_free(r: *mut LaserReport) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// rEB posterior mean and `1 - alpha` HPD hull for score `z` at `x`, in the
/// z-domain.
///
/// # Safety
/// `x` must point to `p` doubles; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn laser_reb(
    cz: *const LaserCustomizer,
    x: *const f64,
    p: usize,
    z: f64,
    alpha: f64,
    out_mean: *mut f64,
    out_lower: *mut f64,
    out_upper: *mut f64,
) -> LaserStatus {
    guard(|| {
        let (cz, x) = profile(cz, x, p)?;
        let eb = EbConfig { alpha, ..EbConfig::default() };
        let r = reb_inference(cz, x, z, &eb).lift()?;
        put(out_mean, r.posterior_z.mean, "out_mean")?;
        put(out_lower, r.posterior_z.hpd.0, "out_lower")?;
        put(out_upper, r.posterior_z.hpd.1, "out_upper")
    })
}

/// Benjamini-Hochberg at level `alpha`; `out_reject[i]` is 1 for rejected
/// hypotheses.
///
/// # Safety
/// `p_values` must point to `n` doubles, `out_reject` to `n` bytes.
#[no_mangle]
pub unsafe extern "C" fn laser_bh(p_values: *const f64, n: usize, alpha: f64, out_reject: *mut u8) -> LaserStatus {
    guard(|| {
        let p = slice(p_values, n, "p_values")?;
        let out = slice_mut(out_reject, n, "out_reject")?;
        let rejected = bh_procedure(p, alpha).lift()?;
        out.fill(0);
        for i in rejected {
            out[i] = 1;
        }
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn errors_are_reported_per_thread() {
        let mut out = ptr::null_mut();
        let s = unsafe { laser_dataset_new(ptr::null(), 3, 1, ptr::null(), &mut out) };
        assert_eq!(s, LaserStatus::NullPointer);
        assert!(out.is_null());
        let msg = unsafe { CStr::from_ptr(laser_last_error()) }.to_str().unwrap();
        assert!(msg.contains("is null"));
        std::thread::spawn(|| assert!(laser_last_error().is_null())).join().unwrap();
    }

    #[test]
    fn version_is_terminated() {
        let v = unsafe { CStr::from_ptr(laser_version()) };
        assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
    }
}
