//! C interface to `cvar_evt`.
//!
//! Handles are opaque and owned by the caller, who releases them with the
//! matching `_free` function. Every fallible function returns a
//! [`CvarEvtStatus`]; on failure the message is available from
//! [`cvar_evt_last_error`] on the same thread until the next call.

use cvar_evt::amse_bootstrap::{estimate_r_with, AlgorithmParams, CalibrationConfig, RPath};
use cvar_evt::core_stats::{cvar_from_raw, CvarSequence, OrderedSample};
use cvar_evt::error::Error;
use cvar_evt::estimators::{
    estimate, estimate_adaptive_with, estimate_pickands_yun, AdaptiveConfig, AdaptiveObjective, EstimatorConfig,
    EstimatorKind,
};
use cvar_evt::evt_kernels::{Kernel, TailContext};
use cvar_evt::measure_opt::{optimize_measure, MeasureTable, ObjectiveSpec};
use cvar_evt::measures::SmoothingMeasure;
use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CvarEvtStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Domain = 3,
    Computation = 4,
    Panic = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CvarEvtKernel {
    Cvar = 0,
    Var = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CvarEvtObjective {
    Variance = 0,
    AbsBias = 1,
    RegMse = 2,
    Amse = 3,
}

/// A sample prepared for estimation (sorted order statistics and CVaR
/// sequence).
pub struct CvarEvtSample {
    ordered: OrderedSample,
    cvar: CvarSequence,
}

/// Result of the bootstrap calibration of `r`.
pub struct CvarEvtRPath {
    path: RPath,
}

/// Stage-two output of the adaptive estimators.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CvarEvtAdaptive {
    pub gamma: f64,
    pub gamma_bar: f64,
    pub alpha: f64,
    pub beta: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> CvarEvtStatus {
    match e {
        Error::Config(_) | Error::Parse(_) | Error::EmptySample | Error::NonFinite(_) => CvarEvtStatus::InvalidArgument,
        Error::MeasureDomain(_) | Error::Domain(_) | Error::InitialEstimate(_) => CvarEvtStatus::Domain,
        _ => CvarEvtStatus::Computation,
    }
}

/// Run `f`, translating errors and panics into status codes.
fn guard<F: FnOnce() -> Result<(), (CvarEvtStatus, String)>>(f: F) -> CvarEvtStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CvarEvtStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            CvarEvtStatus::Panic
        }
    }
}

fn lift(e: Error) -> (CvarEvtStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(name: &str) -> (CvarEvtStatus, String) {
    (CvarEvtStatus::NullPointer, format!("{name} is null"))
}

fn kernel_of(k: CvarEvtKernel) -> Kernel {
    match k {
        CvarEvtKernel::Cvar => Kernel::Cvar,
        CvarEvtKernel::Var => Kernel::Var,
    }
}

/// Message of the last failure on this thread, or null. The pointer stays
/// valid until the next call into the library on this thread.
#[no_mangle]
pub extern "C" fn cvar_evt_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Copy `len` values from `data` into a new sample handle.
///
/// # Safety
/// `data` must point to `len` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cvar_evt_sample_new(data: *const f64, len: usize, out: *mut *mut CvarEvtSample) -> CvarEvtStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        if data.is_null() {
            return Err(null("data"));
        }
        let x = std::slice::from_raw_parts(data, len);
        let (ordered, cvar) = cvar_from_raw(x).map_err(lift)?;
        *out = Box::into_raw(Box::new(CvarEvtSample { ordered, cvar }));
        Ok(())
    })
}

/// # Safety
/// `sample` must come from [`cvar_evt_sample_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cvar_evt_sample_free(sample: *mut CvarEvtSample) {
    if !sample.is_null() {
        drop(Box::from_raw(sample));
    }
}

/// Sample size, or 0 for a null handle.
///
/// # Safety
/// `sample` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cvar_evt_sample_len(sample: *const CvarEvtSample) -> usize {
    sample.as_ref().map_or(0, |s| s.ordered.len())
}

unsafe fn smoothed(
    kind: EstimatorKind,
    sample: *const CvarEvtSample,
    c: f64,
    m: usize,
    alpha: f64,
    beta: f64,
    out: *mut f64,
) -> CvarEvtStatus {
    guard(|| {
        let s = sample.as_ref().ok_or_else(|| null("sample"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let measure = SmoothingMeasure::beta(alpha, beta).map_err(lift)?;
        let config = EstimatorConfig {
            kind,
            ..EstimatorConfig::cvar_smoothed(c, m, measure)
        };
        *out = estimate(&config, &s.ordered, &s.cvar).map_err(lift)?.gamma;
        Ok(())
    })
}

/// CVaR-based smoothed estimate with a beta measure.
///
/// # Safety
/// `sample` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cvar_evt_estimate_cvar_smoothed(
    sample: *const CvarEvtSample,
    c: f64,
    m: usize,
    alpha: f64,
    beta: f64,
    out: *mut f64,
) -> CvarEvtStatus {
    smoothed(EstimatorKind::CvarSmoothed, sample, c, m, alpha, beta, out)
}

/// Order-statistic (VaR) smoothed estimate with a beta measure.
///
/// # Safety
/// `sample` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cvar_evt_estimate_var_smoothed(
    sample: *const CvarEvtSample,
    c: f64,
    m: usize,
    alpha: f64,
    beta: f64,
    out: *mut f64,
) -> CvarEvtStatus {
    smoothed(EstimatorKind::VarSmoothed, sample, c, m, alpha, beta, out)
}

/// Pickands-type estimate on the CVaR sequence.
///
/// # Safety
/// `sample` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cvar_evt_estimate_pickands_yun(
    sample: *const CvarEvtSample,
    u: f64,
    v: f64,
    m: usize,
    out: *mut f64,
) -> CvarEvtStatus {
    guard(|| {
        let s = sample.as_ref().ok_or_else(|| null("sample"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = estimate_pickands_yun(&s.cvar, u, v, m).map_err(lift)?;
        Ok(())
    })
}

/// Two-stage estimate whose stage-two measure minimizes the variance
/// (`objective = Variance`) or the regularized MSE (`objective = RegMse`).
///
/// # Safety
/// `sample` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cvar_evt_estimate_adaptive(
    sample: *const CvarEvtSample,
    kernel: CvarEvtKernel,
    c: f64,
    m: usize,
    objective: CvarEvtObjective,
    rho_bar: f64,
    out: *mut CvarEvtAdaptive,
) -> CvarEvtStatus {
    guard(|| {
        let s = sample.as_ref().ok_or_else(|| null("sample"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let kind = match kernel {
            CvarEvtKernel::Cvar => EstimatorKind::CvarSmoothed,
            CvarEvtKernel::Var => EstimatorKind::VarSmoothed,
        };
        let objective = match objective {
            CvarEvtObjective::Variance => AdaptiveObjective::Variance,
            CvarEvtObjective::RegMse => AdaptiveObjective::RegMse,
            _ => {
                return Err((
                    CvarEvtStatus::InvalidArgument,
                    "adaptive objective must be Variance or RegMse".into(),
                ))
            }
        };
        let config = AdaptiveConfig {
            rho_bar,
            ..AdaptiveConfig::new(kind, c, m, objective)
        };
        let e = estimate_adaptive_with(MeasureTable::global(), &s.ordered, &s.cvar, &config).map_err(lift)?;
        *out = CvarEvtAdaptive {
            gamma: e.gamma,
            gamma_bar: e.gamma_bar,
            alpha: e.alpha,
            beta: e.beta,
        };
        Ok(())
    })
}

/// Optimal beta measure. `m`, `n` are used by RegMse, `m`, `r` by Amse.
///
/// # Safety
/// `alpha`, `beta` and `value` must be writable.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn cvar_evt_optimize_measure(
    gamma: f64,
    rho: f64,
    c: f64,
    objective: CvarEvtObjective,
    kernel: CvarEvtKernel,
    m: usize,
    n: usize,
    r: f64,
    alpha: *mut f64,
    beta: *mut f64,
    value: *mut f64,
) -> CvarEvtStatus {
    guard(|| {
        if alpha.is_null() || beta.is_null() || value.is_null() {
            return Err(null("output pointer"));
        }
        let ctx = TailContext::new(gamma, rho, c).map_err(lift)?;
        let k = kernel_of(kernel);
        let spec = match objective {
            CvarEvtObjective::Variance => ObjectiveSpec::variance(ctx, k),
            CvarEvtObjective::AbsBias => ObjectiveSpec::abs_bias(ctx, k),
            CvarEvtObjective::RegMse => ObjectiveSpec::regmse(ctx, k, m, n),
            CvarEvtObjective::Amse => ObjectiveSpec::amse(ctx, k, m, r),
        };
        let o = optimize_measure(&spec).map_err(lift)?;
        *alpha = o.alpha;
        *beta = o.beta;
        *value = o.value;
        Ok(())
    })
}

/// Asymptotic variance of the smoothed estimator with a beta measure.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cvar_evt_asymptotic_variance(
    kernel: CvarEvtKernel,
    gamma: f64,
    c: f64,
    alpha: f64,
    beta: f64,
    out: *mut f64,
) -> CvarEvtStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let ctx = TailContext::new(gamma, -1.0, c).map_err(lift)?;
        let measure = SmoothingMeasure::beta(alpha, beta).map_err(lift)?;
        *out = cvar_evt::asymptotics::asymptotic_variance(&ctx, &measure, kernel_of(kernel)).map_err(lift)?;
        Ok(())
    })
}

/// Bootstrap calibration path of `r` up to `m0` with default step sizes.
///
/// # Safety
/// `sample` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cvar_evt_estimate_r(
    sample: *const CvarEvtSample,
    m0: usize,
    bootstrap: usize,
    c: f64,
    rho_bar: f64,
    seed: u64,
    out: *mut *mut CvarEvtRPath,
) -> CvarEvtStatus {
    guard(|| {
        let s = sample.as_ref().ok_or_else(|| null("sample"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let params = AlgorithmParams {
            b: bootstrap,
            ..AlgorithmParams::default()
        };
        let cfg = CalibrationConfig::new(c, rho_bar, params, seed);
        let path = estimate_r_with(MeasureTable::global(), &s.ordered, &s.cvar, m0, &cfg).map_err(lift)?;
        *out = Box::into_raw(Box::new(CvarEvtRPath { path }));
        Ok(())
    })
}

/// Number of entries, or 0 for a null handle.
///
/// # Safety
/// `path` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cvar_evt_rpath_len(path: *const CvarEvtRPath) -> usize {
    path.as_ref().map_or(0, |p| p.path.entries.len())
}

/// Entry `i` of the path.
///
/// # Safety
/// `path` must be a live handle; `m` and `r_hat` writable.
#[no_mangle]
pub unsafe extern "C" fn cvar_evt_rpath_get(path: *const CvarEvtRPath, i: usize, m: *mut usize, r_hat: *mut f64) -> CvarEvtStatus {
    guard(|| {
        let p = path.as_ref().ok_or_else(|| null("path"))?;
        if m.is_null() || r_hat.is_null() {
            return Err(null("output pointer"));
        }
        let e = p
            .path
            .entries
            .get(i)
            .ok_or_else(|| (CvarEvtStatus::InvalidArgument, format!("index {i} out of range")))?;
        *m = e.m;
        *r_hat = e.r_hat;
        Ok(())
    })
}

/// # Safety
/// `path` must come from [`cvar_evt_estimate_r`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cvar_evt_rpath_free(path: *mut CvarEvtRPath) {
    if !path.is_null() {
        drop(Box::from_raw(path));
    }
}
