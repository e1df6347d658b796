//! C ABI for `adaptrev-core`.
//!
//! Objects are opaque handles created by the `*_from_json` functions,
//! `adaptrev_optimize_sweep` and `adaptrev_simulate`, and released with the
//! matching `*_free`. Every fallible function returns
//! an [`AdaptrevStatus`]; on failure `adaptrev_last_error` describes the
//! problem. Results are written through out-pointers, which are left
//! untouched on failure.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use adaptrev_core::optimizer::{optimize_sweep, revenue_pi, z_star, SweepGrid};
use adaptrev_core::retention::{classify, survival_s, tangent_point};
use adaptrev_core::simulator::{simulate_schedule, CohortConfig, CohortModel, CohortResult, Increments};
use adaptrev_core::{CurvatureKind, Error, OptimizationResult, RetentionCurve, RevenueFamily, RevenueModel, Schedule};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdaptrevStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidString = 2,
    Config = 3,
    Domain = 4,
    Parameter = 5,
    Classification = 6,
    Range = 7,
    InfiniteRate = 8,
    Capped = 9,
    Io = 10,
    OutOfRange = 11,
    Panic = 12,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdaptrevCurvature {
    LogConcave = 0,
    LogConvex = 1,
    Neither = 2,
    DiscontinuousLogConcaveTail = 3,
}

impl From<CurvatureKind> for AdaptrevCurvature {
    fn from(k: CurvatureKind) -> Self {
        match k {
            CurvatureKind::LogConcave => AdaptrevCurvature::LogConcave,
            CurvatureKind::LogConvex => AdaptrevCurvature::LogConvex,
            CurvatureKind::Neither => AdaptrevCurvature::Neither,
            CurvatureKind::DiscontinuousLogConcaveTail => AdaptrevCurvature::DiscontinuousLogConcaveTail,
        }
    }
}

pub struct AdaptrevCurve(RetentionCurve);
pub struct AdaptrevRevenue(RevenueModel);
pub struct AdaptrevOptimization(OptimizationResult);
pub struct AdaptrevCohort(CohortResult);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

struct Failure(AdaptrevStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::Domain(_) => AdaptrevStatus::Domain,
            Error::Parameter(_) => AdaptrevStatus::Parameter,
            Error::Classification(_) => AdaptrevStatus::Classification,
            Error::Range { .. } => AdaptrevStatus::Range,
            Error::InfiniteRate => AdaptrevStatus::InfiniteRate,
            Error::Capped { .. } => AdaptrevStatus::Capped,
            Error::Config { .. } => AdaptrevStatus::Config,
            Error::Io(_) => AdaptrevStatus::Io,
        };
        Failure(status, e.to_string())
    }
}

type FfiResult<T> = Result<T, Failure>;

fn null(what: &str) -> Failure {
    Failure(AdaptrevStatus::NullPointer, format!("{what} is null"))
}

/// Runs `f`, converting errors and panics into a status code.
fn guard(f: impl FnOnce() -> FfiResult<()>) -> AdaptrevStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => AdaptrevStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            AdaptrevStatus::Panic
        }
    }
}

unsafe fn get<'a, T>(ptr: *const T, what: &str) -> FfiResult<&'a T> {
    ptr.as_ref().ok_or_else(|| null(what))
}

unsafe fn put<T>(out: *mut T, value: T, what: &str) -> FfiResult<()> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

unsafe fn string<'a>(s: *const c_char) -> FfiResult<&'a str> {
    if s.is_null() {
        return Err(null("string argument"));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|e| Failure(AdaptrevStatus::InvalidString, format!("string is not UTF-8: {e}")))
}

fn bad_json(e: serde_json::Error) -> Failure {
    Failure(AdaptrevStatus::Config, e.to_string())
}

/// Message for the most recent failure on this thread. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn adaptrev_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn adaptrev_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a curve from its JSON description, e.g.
/// `{"family":"exp_power","k":2}`.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn adaptrev_curve_from_json(json: *const c_char, out: *mut *mut AdaptrevCurve) -> AdaptrevStatus {
    guard(|| {
        let curve: RetentionCurve = serde_json::from_str(string(json)?).map_err(bad_json)?;
        put(out, Box::into_raw(Box::new(AdaptrevCurve(curve))), "out")
    })
}

/// # Safety
/// `curve` must come from `adaptrev_curve_from_json` and not be used again.
#[no_mangle]
pub unsafe extern "C" fn adaptrev_curve_free(curve: *mut AdaptrevCurve) {
    if !curve.is_null() {
        drop(Box::from_raw(curve));
    }
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn adaptrev_curve_eval(curve: *const AdaptrevCurve, x: f64, out: *mut f64) -> AdaptrevStatus {
    guard(|| put(out, get(curve, "curve")?.0.eval(x)?, "out"))
}

/// Survival `p(x)^(total / x)`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn adaptrev_survival(
    curve: *const AdaptrevCurve,
    total: f64,
    x: f64,
    out: *mut f64,
) -> AdaptrevStatus {
    guard(|| put(out, survival_s(&get(curve, "curve")?.0, total, x)?, "out"))
}

/// Curvature class of `ln p` and the second difference that decided it.
///
/// # Safety
/// Pointers must be valid; `out_evidence` may be null.
#[no_mangle]
pub unsafe extern "C" fn adaptrev_classify(
    curve: *const AdaptrevCurve,
    out_kind: *mut AdaptrevCurvature,
    out_evidence: *mut f64,
) -> AdaptrevStatus {
    guard(|| {
        let class = classify(&get(curve, "curve")?.0)?;
        put(out_kind, class.kind.into(), "out_kind")?;
        if !out_evidence.is_null() {
            out_evidence.write(class.evidence());
        }
        Ok(())
    })
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn adaptrev_tangent_point(curve: *const AdaptrevCurve, out: *mut f64) -> AdaptrevStatus {
    guard(|| put(out, tangent_point(&get(curve, "curve")?.0)?, "out"))
}

/// Builds a revenue model from JSON, e.g.
/// `{"r":{"family":"identity"},"delta":0.9}`.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn adaptrev_revenue_from_json(
    json: *const c_char,
    out: *mut *mut AdaptrevRevenue,
) -> AdaptrevStatus {
    guard(|| {
        let rev: RevenueModel = serde_json::from_str(string(json)?).map_err(bad_json)?;
        put(out, Box::into_raw(Box::new(AdaptrevRevenue(rev))), "out")
    })
}

/// # Safety
/// `rev` must come from `adaptrev_revenue_from_json` and not be used again.
#[no_mangle]
pub unsafe extern "C" fn adaptrev_revenue_free(rev: *mut AdaptrevRevenue) {
    if !rev.is_null() {
        drop(Box::from_raw(rev));
    }
}

/// Discounted revenue of `z` increases of size `x`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn adaptrev_revenue_pi(
    curve: *const AdaptrevCurve,
    rev: *const AdaptrevRevenue,
    x: f64,
    z: u32,
    out: *mut f64,
) -> AdaptrevStatus {
    guard(|| {
        let sched = Schedule::new(x, z)?;
        put(
            out,
            revenue_pi(&get(curve, "curve")?.0, &get(rev, "rev")?.0, &sched)?,
            "out",
        )
    })
}

/// Optimal number of steps of size `x`; `out_capped` reports whether the
/// search stopped at `z_max`.
///
/// # Safety
/// Pointers must be valid; `out_capped` may be null.
#[no_mangle]
pub unsafe extern "C" fn adaptrev_z_star(
    curve: *const AdaptrevCurve,
    rev: *const AdaptrevRevenue,
    x: f64,
    z_max: u32,
    out_z: *mut u32,
    out_capped: *mut bool,
) -> AdaptrevStatus {
    guard(|| {
        let zs = z_star(&get(curve, "curve")?.0, &get(rev, "rev")?.0, x, z_max)?;
        put(out_z, zs.z, "out_z")?;
        if !out_capped.is_null() {
            out_capped.write(zs.capped);
        }
        Ok(())
    })
}

/// Sweeps step sizes `grid_min, grid_min + grid_step, ..., <= grid_max`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn adaptrev_optimize_sweep(
    curve: *const AdaptrevCurve,
    rev: *const AdaptrevRevenue,
    grid_min: f64,
    grid_max: f64,
    grid_step: f64,
    z_max: u32,
    out: *mut *mut AdaptrevOptimization,
) -> AdaptrevStatus {
    guard(|| {
        let grid = SweepGrid::new(grid_min, grid_max, grid_step)?.points();
        let res = optimize_sweep(&get(curve, "curve")?.0, &get(rev, "rev")?.0, &grid, z_max)?;
        put(out, Box::into_raw(Box::new(AdaptrevOptimization(res))), "out")
    })
}

/// # Safety
/// `opt` must come from `adaptrev_optimize_sweep` and not be used again.
#[no_mangle]
pub unsafe extern "C" fn adaptrev_optimization_free(opt: *mut AdaptrevOptimization) {
    if !opt.is_null() {
        drop(Box::from_raw(opt));
    }
}

/// Best schedule and its value. Any out-pointer may be null.
///
/// # Safety
/// `opt` must be valid.
#[no_mangle]
pub unsafe extern "C" fn adaptrev_optimization_best(
    opt: *const AdaptrevOptimization,
    out_x: *mut f64,
    out_z: *mut u32,
    out_total: *mut f64,
    out_value: *mut f64,
) -> AdaptrevStatus {
    guard(|| {
        let res = &get(opt, "opt")?.0;
        for (ptr, v) in [(out_x, res.best.x), (out_total, res.best.total), (out_value, res.value)] {
            if !ptr.is_null() {
                ptr.write(v);
            }
        }
        if !out_z.is_null() {
            out_z.write(res.best.z);
        }
        Ok(())
    })
}

/// Number of grid points in the sweep trace (0 for a null handle).
///
/// # Safety
/// `opt` must be valid or null.
#[no_mangle]
pub unsafe extern "C" fn adaptrev_optimization_trace_len(opt: *const AdaptrevOptimization) -> usize {
    opt.as_ref().map_or(0, |o| o.0.sweep_trace.len())
}

/// Trace row `index`: step size, optimal step count, total and revenue.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn adaptrev_optimization_trace_point(
    opt: *const AdaptrevOptimization,
    index: usize,
    out_x: *mut f64,
    out_z: *mut u32,
    out_total: *mut f64,
    out_pi: *mut f64,
) -> AdaptrevStatus {
    guard(|| {
        let trace = &get(opt, "opt")?.0.sweep_trace;
        let t = trace.get(index).ok_or_else(|| {
            Failure(
                AdaptrevStatus::OutOfRange,
                format!("trace index {index} out of range (len {})", trace.len()),
            )
        })?;
        put(out_x, t.x, "out_x")?;
        put(out_z, t.z_star, "out_z")?;
        put(out_total, t.total, "out_total")?;
        put(out_pi, t.pi, "out_pi")
    })
}

/// Simulates `n_users` users facing `z` increases of size `x` under `curve`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn adaptrev_simulate(
    curve: *const AdaptrevCurve,
    x: f64,
    z: u32,
    n_users: u64,
    seed: u64,
    out: *mut *mut AdaptrevCohort,
) -> AdaptrevStatus {
    guard(|| {
        let cfg = CohortConfig {
            n_users,
            seed,
            model: CohortModel::direct(get(curve, "curve")?.0.clone()),
            increments: Increments::Equal(Schedule::new(x, z)?),
            revenue: RevenueFamily::Identity,
        };
        let res = simulate_schedule(&cfg)?;
        put(out, Box::into_raw(Box::new(AdaptrevCohort(res))), "out")
    })
}

/// # Safety
/// `cohort` must come from `adaptrev_simulate` and not be used again.
#[no_mangle]
pub unsafe extern "C" fn adaptrev_cohort_free(cohort: *mut AdaptrevCohort) {
    if !cohort.is_null() {
        drop(Box::from_raw(cohort));
    }
}

/// Number of periods including the starting one, `z + 1` (0 for null).
///
/// # Safety
/// `cohort` must be valid or null.
#[no_mangle]
pub unsafe extern "C" fn adaptrev_cohort_periods(cohort: *const AdaptrevCohort) -> usize {
    cohort.as_ref().map_or(0, |c| c.0.survivors_per_period.len())
}

/// Survivors after `period` increases and the 95% Wilson interval of the
/// surviving fraction. Interval pointers may be null.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn adaptrev_cohort_survivors(
    cohort: *const AdaptrevCohort,
    period: usize,
    out_survivors: *mut u64,
    out_ci_lo: *mut f64,
    out_ci_hi: *mut f64,
) -> AdaptrevStatus {
    guard(|| {
        let c = &get(cohort, "cohort")?.0;
        let s = *c.survivors_per_period.get(period).ok_or_else(|| {
            Failure(
                AdaptrevStatus::OutOfRange,
                format!("period {period} out of range (len {})", c.survivors_per_period.len()),
            )
        })?;
        put(out_survivors, s, "out_survivors")?;
        if !out_ci_lo.is_null() {
            out_ci_lo.write(c.ci_95[period].lo);
        }
        if !out_ci_hi.is_null() {
            out_ci_hi.write(c.ci_95[period].hi);
        }
        Ok(())
    })
}
