//! C interface to the survival-regression library.
//!
//! Conventions:
//! * every entry point catches panics and reports them as `GHS_STATUS_PANIC`,
//! * handles created by `ghs_dataset_new` / `ghs_fit` are released with the
//!   matching `*_free`; `free` on NULL is a no-op,
//! * strings returned through `char **` out-parameters are NUL-terminated
//!   UTF-8 owned by the caller, released with `ghs_string_free`,
//! * on any non-OK status the out-parameter is left NULL and a detail message
//!   is available from `ghs_last_error_message` until the next call on the
//!   same thread.

use ghsurv::{
    diagnose, fit_mle, BaselineFamily, DiagnosticConfig, Error, FitConfig, FitResult,
    HazardStructure, SurvivalDataset,
};
use nalgebra::DMatrix;
use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

/// Outcome of an interface call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GhsStatus {
    /// Success.
    Ok = 0,
    /// A required pointer argument was NULL.
    NullArgument = 1,
    /// Arguments were structurally invalid (bad sizes, unknown names,
    /// malformed data).
    InvalidInput = 2,
    /// Optimization did not converge.
    NonConvergence = 3,
    /// A numeric routine (quadrature, inversion, diagnostics) failed.
    NumericFailure = 4,
    /// A panic was caught at the boundary.
    Panic = 5,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_last_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(err: &Error) -> GhsStatus {
    match err {
        Error::Domain(_)
        | Error::Shape(_)
        | Error::Data(_)
        | Error::Ingestion(_)
        | Error::Io(_)
        | Error::Csv(_)
        | Error::Json(_) => GhsStatus::InvalidInput,
        Error::NonConvergence(_) => GhsStatus::NonConvergence,
        Error::Integration(_) | Error::Inversion(_) | Error::Sampling(_)
        | Error::Diagnostic(_) => GhsStatus::NumericFailure,
    }
}

/// Runs `body` with panic containment; `body` reports its own status.
fn guarded(body: impl FnOnce() -> GhsStatus) -> GhsStatus {
    clear_last_error();
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(s) => s,
        Err(_) => {
            set_last_error("panic caught at the C boundary".into());
            GhsStatus::Panic
        }
    }
}

/// Right-censored dataset handle.
pub struct GhsDataset {
    inner: SurvivalDataset,
}

/// Fitted-model handle.
pub struct GhsFit {
    inner: FitResult,
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ghs_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Detail message for the most recent failing call on this thread, or NULL.
/// The pointer is invalidated by the next interface call on the same thread.
#[no_mangle]
pub extern "C" fn ghs_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| {
        e.borrow()
            .as_ref()
            .map_or(ptr::null(), |c| c.as_ptr())
    })
}

/// Builds a dataset from flat arrays.
///
/// `times` (length `n`) are strictly positive; `status` (length `n`) is 0
/// (censored) or 1 (event). `x` is the hazard-level design, row-major
/// `n * p`; `xtilde` the time-level design, row-major `n * q`. `x` may be
/// NULL iff `p == 0`, likewise `xtilde`/`q`. On success `*out` owns the
/// copied data.
///
/// # Safety
/// Pointers must be valid for the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn ghs_dataset_new(
    times: *const f64,
    status: *const c_int,
    n: usize,
    x: *const f64,
    p: usize,
    xtilde: *const f64,
    q: usize,
    out: *mut *mut GhsDataset,
) -> GhsStatus {
    guarded(|| {
        if out.is_null() {
            set_last_error("out pointer is NULL".into());
            return GhsStatus::NullArgument;
        }
        *out = ptr::null_mut();
        if times.is_null() || status.is_null() || (x.is_null() && p > 0)
            || (xtilde.is_null() && q > 0)
        {
            set_last_error("required array pointer is NULL".into());
            return GhsStatus::NullArgument;
        }
        let times = slice::from_raw_parts(times, n).to_vec();
        let status_raw = slice::from_raw_parts(status, n);
        if status_raw.iter().any(|&d| d != 0 && d != 1) {
            set_last_error("status entries must be 0 or 1".into());
            return GhsStatus::InvalidInput;
        }
        let status: Vec<u8> = status_raw.iter().map(|&d| d as u8).collect();
        let xs = if p > 0 {
            slice::from_raw_parts(x, n * p)
        } else {
            &[]
        };
        let xts = if q > 0 {
            slice::from_raw_parts(xtilde, n * q)
        } else {
            &[]
        };
        let xm = DMatrix::from_fn(n, p, |i, j| xs[i * p + j]);
        let xtm = DMatrix::from_fn(n, q, |i, j| xts[i * q + j]);
        match SurvivalDataset::new(times, status, xm, xtm) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(GhsDataset { inner }));
                GhsStatus::Ok
            }
            Err(e) => {
                set_last_error(e.to_string());
                status_of(&e)
            }
        }
    })
}

/// Releases a dataset handle. NULL is ignored.
///
/// # Safety
/// `ds` must come from `ghs_dataset_new` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn ghs_dataset_free(ds: *mut GhsDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

/// Number of rows; 0 for NULL.
///
/// # Safety
/// `ds` must be a live dataset handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn ghs_dataset_rows(ds: *const GhsDataset) -> usize {
    if ds.is_null() {
        0
    } else {
        (*ds).inner.n()
    }
}

/// Number of uncensored rows; 0 for NULL.
///
/// # Safety
/// `ds` must be a live dataset handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn ghs_dataset_events(ds: *const GhsDataset) -> usize {
    if ds.is_null() {
        0
    } else {
        (*ds).inner.n_events()
    }
}

/// Fits a model by maximum likelihood.
///
/// `family` is one of "weibull", "pgw", "ew", "gg", "lognormal"; `structure`
/// one of "gh", "ph", "aft", "ah". `seed` drives the multistart jitters. On
/// `GHS_STATUS_OK` the caller owns `*out`; a fit whose convergence filter
/// failed still returns OK with `ghs_fit_converged` reporting 0.
///
/// # Safety
/// Pointers must be valid; strings must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn ghs_fit(
    ds: *const GhsDataset,
    family: *const c_char,
    structure: *const c_char,
    seed: u64,
    out: *mut *mut GhsFit,
) -> GhsStatus {
    guarded(|| {
        if out.is_null() {
            set_last_error("out pointer is NULL".into());
            return GhsStatus::NullArgument;
        }
        *out = ptr::null_mut();
        if ds.is_null() || family.is_null() || structure.is_null() {
            set_last_error("required argument is NULL".into());
            return GhsStatus::NullArgument;
        }
        let parse_c = |s: *const c_char| -> Result<&str, GhsStatus> {
            CStr::from_ptr(s).to_str().map_err(|_| {
                set_last_error("string argument is not valid UTF-8".into());
                GhsStatus::InvalidInput
            })
        };
        let fam = match parse_c(family).and_then(|s| {
            BaselineFamily::parse(s).map_err(|e| {
                set_last_error(e.to_string());
                GhsStatus::InvalidInput
            })
        }) {
            Ok(f) => f,
            Err(s) => return s,
        };
        let stru = match parse_c(structure).and_then(|s| {
            HazardStructure::parse(s).map_err(|e| {
                set_last_error(e.to_string());
                GhsStatus::InvalidInput
            })
        }) {
            Ok(s) => s,
            Err(s) => return s,
        };
        let config = FitConfig {
            seed,
            ..FitConfig::default()
        };
        match fit_mle(&(*ds).inner, fam, stru, &config) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(GhsFit { inner }));
                GhsStatus::Ok
            }
            Err(e) => {
                set_last_error(e.to_string());
                status_of(&e)
            }
        }
    })
}

/// Releases a fit handle. NULL is ignored.
///
/// # Safety
/// `fit` must come from `ghs_fit` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn ghs_fit_free(fit: *mut GhsFit) {
    if !fit.is_null() {
        drop(Box::from_raw(fit));
    }
}

/// Maximized log-likelihood; NaN for NULL.
///
/// # Safety
/// `fit` must be a live fit handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn ghs_fit_loglik(fit: *const GhsFit) -> f64 {
    if fit.is_null() {
        f64::NAN
    } else {
        (*fit).inner.loglik
    }
}

/// Akaike information criterion; NaN for NULL.
///
/// # Safety
/// `fit` must be a live fit handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn ghs_fit_aic(fit: *const GhsFit) -> f64 {
    if fit.is_null() {
        f64::NAN
    } else {
        (*fit).inner.aic
    }
}

/// 1 when the convergence filter passed, else 0.
///
/// # Safety
/// `fit` must be a live fit handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn ghs_fit_converged(fit: *const GhsFit) -> c_int {
    if fit.is_null() {
        0
    } else {
        (*fit).inner.converged as c_int
    }
}

/// Free-parameter count entering the AIC; 0 for NULL.
///
/// # Safety
/// `fit` must be a live fit handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn ghs_fit_n_params(fit: *const GhsFit) -> usize {
    if fit.is_null() {
        0
    } else {
        (*fit).inner.k
    }
}

/// Length of the full natural-scale vector (baseline, alpha, beta) including
/// entries a constrained structure pins at zero; 0 for NULL.
///
/// # Safety
/// `fit` must be a live fit handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn ghs_fit_n_theta(fit: *const GhsFit) -> usize {
    if fit.is_null() {
        0
    } else {
        let theta = &(*fit).inner.theta_hat;
        theta.baseline.xi.len() + theta.alpha.len() + theta.beta.len()
    }
}

/// Copies the natural-scale estimates (baseline, then alpha, then beta) into
/// `buf`. `cap` is the buffer capacity in doubles; the required count is
/// `ghs_fit_n_theta`. `*written` receives the count on success.
///
/// # Safety
/// `buf` must be valid for `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn ghs_fit_params(
    fit: *const GhsFit,
    buf: *mut f64,
    cap: usize,
    written: *mut usize,
) -> GhsStatus {
    guarded(|| {
        if fit.is_null() || buf.is_null() || written.is_null() {
            set_last_error("required argument is NULL".into());
            return GhsStatus::NullArgument;
        }
        let theta = &(*fit).inner.theta_hat;
        let need = ghs_fit_n_theta(fit);
        if cap < need {
            set_last_error(format!("buffer holds {cap} doubles, need {need}"));
            return GhsStatus::InvalidInput;
        }
        let vals: Vec<f64> = theta
            .baseline
            .xi
            .iter()
            .chain(theta.alpha.iter())
            .chain(theta.beta.iter())
            .copied()
            .collect();
        ptr::copy_nonoverlapping(vals.as_ptr(), buf, vals.len());
        *written = vals.len();
        GhsStatus::Ok
    })
}

fn emit_json<T: serde::Serialize>(value: &T, out: *mut *mut c_char) -> GhsStatus {
    match serde_json::to_string(value) {
        Ok(s) => {
            let c = CString::new(s.replace('\0', " ")).unwrap_or_default();
            unsafe { *out = c.into_raw() };
            GhsStatus::Ok
        }
        Err(e) => {
            set_last_error(e.to_string());
            GhsStatus::NumericFailure
        }
    }
}

/// Serializes the full fit (estimates, likelihood, Hessians, trace) as JSON.
///
/// # Safety
/// `fit` must be a live fit handle; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn ghs_fit_json(fit: *const GhsFit, out: *mut *mut c_char) -> GhsStatus {
    guarded(|| {
        if out.is_null() {
            set_last_error("out pointer is NULL".into());
            return GhsStatus::NullArgument;
        }
        *out = ptr::null_mut();
        if fit.is_null() {
            set_last_error("fit handle is NULL".into());
            return GhsStatus::NullArgument;
        }
        emit_json(&(*fit).inner, out)
    })
}

/// Runs the near-redundancy diagnosis on a converged fit with default
/// settings and serializes the report as JSON.
///
/// # Safety
/// `fit` must be a live fit handle; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn ghs_diagnose_json(
    fit: *const GhsFit,
    out: *mut *mut c_char,
) -> GhsStatus {
    guarded(|| {
        if out.is_null() {
            set_last_error("out pointer is NULL".into());
            return GhsStatus::NullArgument;
        }
        *out = ptr::null_mut();
        if fit.is_null() {
            set_last_error("fit handle is NULL".into());
            return GhsStatus::NullArgument;
        }
        match diagnose(&(*fit).inner, &DiagnosticConfig::default()) {
            Ok(report) => emit_json(&report, out),
            Err(e) => {
                set_last_error(e.to_string());
                status_of(&e)
            }
        }
    })
}

/// Releases a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn ghs_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
