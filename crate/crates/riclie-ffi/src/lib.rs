//! C ABI for the Riccati toolkit: opaque equation handles, integer status
//! codes, and JSON or CSV strings for structured results.
//!
//! Conventions:
//!
//! * Every fallible function returns a status code; `RICLIE_OK` (0) means
//!   success and anything else leaves the out-pointers untouched.
//! * A human-readable message for the most recent failure on the current
//!   thread is available from [`riclie_last_error`].
//! * Every `char*` handed out (reports, CSV, error copies) is heap-allocated
//!   and must be released with [`riclie_string_free`]; equation handles must
//!   be released with [`riclie_eq_free`].
//! * The point at infinity of the compactified line is passed and returned
//!   as the IEEE `INFINITY` of either sign; NaN is rejected.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use riclie::algebra::{ExtReal, Sl2, Sl2Curve};
use riclie::expr::Grid;
use riclie::integrability::{classify, plan_for, Case, Classification, ReductionPlan};
use riclie::riccati::{transform, RiccatiEq};
use riclie::solvers::{
    oracle_integrate, point_distance, solve_linear, upper_gamma, LinearEq, SolutionTrace,
    StepCtrl,
};

/// Success.
pub const RICLIE_OK: i32 = 0;
/// A required pointer argument was null.
pub const RICLIE_NULL_POINTER: i32 = 1;
/// The input could not be used: syntax error, bad domain, non-unimodular
/// matrix, NaN where a point of the line was expected.
pub const RICLIE_INVALID_INPUT: i32 = 2;
/// A numerical procedure failed: step-size underflow, quadrature stagnation,
/// a reduction that did not survive verification.
pub const RICLIE_NUMERICAL: i32 = 3;
/// A string argument was not valid UTF-8.
pub const RICLIE_BAD_UTF8: i32 = 4;
/// An internal invariant was violated; the library caught a panic at the
/// boundary instead of unwinding into the caller.
pub const RICLIE_PANIC: i32 = 5;

/// An equation `dy/dt = b0(t) + b1(t) y + b2(t) y^2` with its time domain.
/// Opaque: create with [`riclie_eq_parse`], release with [`riclie_eq_free`].
pub struct RiclieEquation {
    inner: RiccatiEq,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let sanitized = msg.replace('\0', " ");
    let stored = CString::new(sanitized)
        .unwrap_or_else(|_| CString::new("riclie error").expect("static message"));
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(stored));
}

fn status_for(err: &riclie::Error) -> i32 {
    match err.exit_code() {
        2 => RICLIE_INVALID_INPUT,
        _ => RICLIE_NUMERICAL,
    }
}

fn fail(err: riclie::Error) -> i32 {
    let code = status_for(&err);
    set_error(err.to_string());
    code
}

fn guarded<F: FnOnce() -> i32>(f: F) -> i32 {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(code) => code,
        Err(_) => {
            set_error("internal panic caught at the C boundary".into());
            RICLIE_PANIC
        }
    }
}

/// # Safety
/// `ptr` must be null or a NUL-terminated C string valid for reads.
unsafe fn read_str<'a>(ptr: *const c_char, what: &str) -> Result<&'a str, i32> {
    if ptr.is_null() {
        set_error(format!("{what} is a null pointer"));
        return Err(RICLIE_NULL_POINTER);
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        set_error(format!("{what} is not valid UTF-8"));
        RICLIE_BAD_UTF8
    })
}

fn require_out<T>(out: *mut T, what: &str) -> Result<(), i32> {
    if out.is_null() {
        set_error(format!("{what} is a null pointer"));
        return Err(RICLIE_NULL_POINTER);
    }
    Ok(())
}

/// # Safety
/// `out` must be valid for writes.
unsafe fn give_string(text: String, out: *mut *mut c_char) -> i32 {
    match CString::new(text) {
        Ok(c) => {
            *out = c.into_raw();
            RICLIE_OK
        }
        Err(_) => {
            set_error("output contained an interior NUL byte".into());
            RICLIE_INVALID_INPUT
        }
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let n = n.max(2);
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

fn ext_json(v: ExtReal) -> serde_json::Value {
    match v {
        ExtReal::Finite(x) => serde_json::json!(x),
        ExtReal::Infinity => serde_json::json!("inf"),
    }
}

fn trace_fields(trace: &SolutionTrace) -> (Vec<f64>, Vec<serde_json::Value>, Vec<String>) {
    (
        trace.times.clone(),
        trace.values.iter().map(|v| ext_json(*v)).collect(),
        trace.charts.iter().map(|c| c.to_string()).collect(),
    )
}

// ---------------------------------------------------------------------------
// Library metadata and error retrieval
// ---------------------------------------------------------------------------

/// The library version as a static string; do not free.
#[no_mangle]
pub extern "C" fn riclie_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// A copy of the most recent error message on this thread, or null if no
/// error has been recorded.  Release the copy with [`riclie_string_free`].
#[no_mangle]
pub extern "C" fn riclie_last_error() -> *mut c_char {
    LAST_ERROR.with(|slot| match &*slot.borrow() {
        Some(msg) => msg.clone().into_raw(),
        None => ptr::null_mut(),
    })
}

/// Release a string returned by this library.  Null is ignored.
///
/// # Safety
/// `s` must be null or a pointer previously returned by a `riclie_*`
/// function and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn riclie_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

// ---------------------------------------------------------------------------
// Equation lifecycle
// ---------------------------------------------------------------------------

/// Parse an equation from three coefficient expressions over the domain
/// `[t_lo, t_hi]`.  `params_json` is an optional JSON object of named
/// constants (null means none).  On success writes a handle to `out`.
///
/// # Safety
/// `b0`, `b1`, `b2` must be NUL-terminated strings; `params_json` must be
/// null or NUL-terminated; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn riclie_eq_parse(
    b0: *const c_char,
    b1: *const c_char,
    b2: *const c_char,
    params_json: *const c_char,
    t_lo: f64,
    t_hi: f64,
    out: *mut *mut RiclieEquation,
) -> i32 {
    guarded(|| {
        if let Err(code) = require_out(out, "out") {
            return code;
        }
        let b0 = match read_str(b0, "b0") {
            Ok(s) => s,
            Err(code) => return code,
        };
        let b1 = match read_str(b1, "b1") {
            Ok(s) => s,
            Err(code) => return code,
        };
        let b2 = match read_str(b2, "b2") {
            Ok(s) => s,
            Err(code) => return code,
        };
        let params: BTreeMap<String, f64> = if params_json.is_null() {
            BTreeMap::new()
        } else {
            let text = match read_str(params_json, "params_json") {
                Ok(s) => s,
                Err(code) => return code,
            };
            match serde_json::from_str(text) {
                Ok(map) => map,
                Err(err) => {
                    set_error(format!("params_json: {err}"));
                    return RICLIE_INVALID_INPUT;
                }
            }
        };
        match RiccatiEq::parse(b0, b1, b2, &params, (t_lo, t_hi)) {
            Ok(eq) => {
                *out = Box::into_raw(Box::new(RiclieEquation { inner: eq }));
                RICLIE_OK
            }
            Err(err) => fail(err),
        }
    })
}

/// Release an equation handle.  Null is ignored.
///
/// # Safety
/// `eq` must be null or a handle from this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn riclie_eq_free(eq: *mut RiclieEquation) {
    if !eq.is_null() {
        drop(Box::from_raw(eq));
    }
}

/// Write the equation's time domain to `t_lo` and `t_hi`.
///
/// # Safety
/// `eq` must be a live handle; `t_lo` and `t_hi` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn riclie_eq_domain(
    eq: *const RiclieEquation,
    t_lo: *mut f64,
    t_hi: *mut f64,
) -> i32 {
    guarded(|| {
        if eq.is_null() {
            set_error("eq is a null pointer".into());
            return RICLIE_NULL_POINTER;
        }
        if let Err(code) = require_out(t_lo, "t_lo") {
            return code;
        }
        if let Err(code) = require_out(t_hi, "t_hi") {
            return code;
        }
        let (lo, hi) = (*eq).inner.domain();
        *t_lo = lo;
        *t_hi = hi;
        RICLIE_OK
    })
}

// ---------------------------------------------------------------------------
// Classification and solving
// ---------------------------------------------------------------------------

fn build_grid(eq: &RiccatiEq, grid_points: u32, tol_const: f64) -> riclie::Result<Grid> {
    let (lo, hi) = eq.domain();
    let n = if grid_points == 0 {
        Grid::DEFAULT_POINTS
    } else {
        grid_points as usize
    };
    let tol = if tol_const.is_finite() && tol_const > 0.0 {
        tol_const
    } else {
        Grid::DEFAULT_TOLERANCE
    };
    Grid::chebyshev(lo, hi, n, tol)
}

fn plan_labels(plan: &ReductionPlan) -> serde_json::Value {
    serde_json::Value::Array(
        plan.steps
            .iter()
            .map(|s| serde_json::to_value(s.label).expect("labels serialize"))
            .collect(),
    )
}

fn classification_json(
    class: &Classification,
    plan: Option<&ReductionPlan>,
    plan_error: Option<&str>,
) -> serde_json::Value {
    let mut value = serde_json::to_value(class).expect("classification serializes");
    let map = value.as_object_mut().expect("classification is an object");
    let case = map.remove("case").unwrap_or(serde_json::Value::Null);
    let evidence = serde_json::Value::Object(std::mem::take(map));
    let mut report = serde_json::json!({
        "case": case,
        "evidence": evidence,
        "suggested_plan": plan.map(plan_labels).unwrap_or(serde_json::Value::Null),
    });
    if let Some(msg) = plan_error {
        report["plan_error"] = serde_json::json!(msg);
    }
    report
}

/// Classify the equation and report the result as JSON: the case tag, the
/// fitted evidence, and the reduction plan the solver would use (or null).
/// `grid_points` of 0 and a non-positive `tol_const` select the defaults.
///
/// # Safety
/// `eq` must be a live handle; `out_json` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn riclie_eq_classify_json(
    eq: *const RiclieEquation,
    grid_points: u32,
    tol_const: f64,
    out_json: *mut *mut c_char,
) -> i32 {
    guarded(|| {
        if eq.is_null() {
            set_error("eq is a null pointer".into());
            return RICLIE_NULL_POINTER;
        }
        if let Err(code) = require_out(out_json, "out_json") {
            return code;
        }
        let eq = &(*eq).inner;
        let grid = match build_grid(eq, grid_points, tol_const) {
            Ok(grid) => grid,
            Err(err) => return fail(err),
        };
        let class = match classify(eq, &grid) {
            Ok(class) => class,
            Err(err) => return fail(err),
        };
        let (plan, plan_error) = match plan_for(eq, &class, &grid) {
            Ok(plan) => (plan, None),
            Err(err) if status_for(&err) == RICLIE_NUMERICAL => (None, Some(err.to_string())),
            Err(err) => return fail(err),
        };
        let report = classification_json(&class, plan.as_ref(), plan_error.as_deref());
        give_string(report.to_string(), out_json)
    })
}

fn method_for_case(case: &Case) -> &'static str {
    match case {
        Case::LinearAlready => "quadratures",
        Case::InverseLinear => "inversion to quadratures",
        Case::Autonomous { .. } => "autonomous closed form",
        Case::Separable { .. } => "time reparametrization",
        Case::LinearizableByConstant { .. } => "particular-solution reduction",
        Case::CtuIntegrable { .. } => "rescaling reduction",
        _ => "numerical-oracle",
    }
}

fn solve_report(
    eq: &RiccatiEq,
    y0: ExtReal,
    span: (f64, f64),
    samples: &[f64],
    ctrl: &StepCtrl,
) -> riclie::Result<serde_json::Value> {
    let grid = build_grid(eq, 0, f64::NAN)?;
    let class = classify(eq, &grid)?;
    let (plan, plan_error) = match plan_for(eq, &class, &grid) {
        Ok(plan) => (plan, None),
        Err(err) if status_for(&err) == RICLIE_NUMERICAL => (None, Some(err.to_string())),
        Err(err) => return Err(err),
    };
    let oracle = oracle_integrate(eq, span, y0, samples, ctrl)?;

    let mut warnings: Vec<String> = Vec::new();
    let analytic: Option<(SolutionTrace, &'static str)> = if matches!(class.case, Case::LinearAlready)
    {
        match y0 {
            ExtReal::Finite(v) => {
                let linear = LinearEq {
                    a: eq.b0().clone(),
                    b: eq.b1().clone(),
                };
                Some((solve_linear(&linear, span.0, v, samples, ctrl.rtol)?, "quadratures"))
            }
            ExtReal::Infinity => Some((
                SolutionTrace::from_values(
                    samples.to_vec(),
                    vec![ExtReal::Infinity; samples.len()],
                ),
                "quadratures",
            )),
        }
    } else if let Some(plan) = &plan {
        let run = plan.execute(span.0, y0, samples, ctrl.rtol)?;
        warnings.extend(run.warnings);
        Some((run.trace, method_for_case(&class.case)))
    } else {
        None
    };

    let (trace, method, oracle_error) = match analytic {
        Some((trace, method)) => {
            let err = trace
                .values
                .iter()
                .zip(oracle.values.iter())
                .map(|(a, b)| point_distance(*a, *b))
                .fold(0.0f64, f64::max);
            (trace, method, err)
        }
        None => {
            let mut tight = *ctrl;
            tight.rtol = (ctrl.rtol * 1e-2).max(1e-13);
            tight.atol = (ctrl.atol * 1e-2).max(1e-306);
            let refined = oracle_integrate(eq, span, y0, samples, &tight)?;
            let err = oracle
                .values
                .iter()
                .zip(refined.values.iter())
                .map(|(a, b)| point_distance(*a, *b))
                .fold(0.0f64, f64::max);
            (oracle, "numerical-oracle", err)
        }
    };
    if let Some(msg) = plan_error {
        warnings.push(format!("reduction plan failed verification: {msg}"));
    }

    let (times, values, charts) = trace_fields(&trace);
    let mut report = serde_json::json!({
        "case": class.case.name(),
        "method": method,
        "oracle_error": oracle_error,
        "warnings": warnings,
        "t": times,
        "y": values,
        "chart": charts,
    });
    if report["warnings"].as_array().is_some_and(Vec::is_empty) {
        report["warnings"] = serde_json::json!([]);
    }
    Ok(report)
}

/// Solve the initial-value problem `y(t0) = y0` over `[t0, t1]` at
/// `n_samples` evenly spaced times and report the result as JSON with `t`,
/// `y` (numbers, or the string `"inf"` at poles), `chart`, the method used,
/// and the deviation from the numerical oracle.  Pass IEEE `INFINITY` as
/// `y0` to start at the point at infinity; a non-positive `rtol` selects the
/// default.
///
/// # Safety
/// `eq` must be a live handle; `out_json` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn riclie_eq_solve_json(
    eq: *const RiclieEquation,
    y0: f64,
    t0: f64,
    t1: f64,
    n_samples: u32,
    rtol: f64,
    out_json: *mut *mut c_char,
) -> i32 {
    guarded(|| {
        if eq.is_null() {
            set_error("eq is a null pointer".into());
            return RICLIE_NULL_POINTER;
        }
        if let Err(code) = require_out(out_json, "out_json") {
            return code;
        }
        let eq = &(*eq).inner;
        let y0 = match ExtReal::from_f64(y0) {
            Ok(v) => v,
            Err(err) => return fail(err),
        };
        let span = (t0, t1);
        if let Err(err) = eq.check_span(span) {
            return fail(err);
        }
        let mut ctrl = StepCtrl::default();
        if rtol.is_finite() && rtol > 0.0 {
            ctrl.rtol = rtol;
        }
        let samples = linspace(t0, t1, n_samples as usize);
        match solve_report(eq, y0, span, &samples, &ctrl) {
            Ok(report) => give_string(report.to_string(), out_json),
            Err(err) => fail(err),
        }
    })
}

/// Integrate the equation with the numerical oracle alone and return the
/// trace as CSV (`t,y,chart`, with `inf` at poles).  Non-positive `rtol` or
/// `atol` select the defaults.
///
/// # Safety
/// `eq` must be a live handle; `out_csv` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn riclie_eq_oracle_csv(
    eq: *const RiclieEquation,
    y0: f64,
    t0: f64,
    t1: f64,
    n_samples: u32,
    rtol: f64,
    atol: f64,
    out_csv: *mut *mut c_char,
) -> i32 {
    guarded(|| {
        if eq.is_null() {
            set_error("eq is a null pointer".into());
            return RICLIE_NULL_POINTER;
        }
        if let Err(code) = require_out(out_csv, "out_csv") {
            return code;
        }
        let eq = &(*eq).inner;
        let y0 = match ExtReal::from_f64(y0) {
            Ok(v) => v,
            Err(err) => return fail(err),
        };
        let span = (t0, t1);
        if let Err(err) = eq.check_span(span) {
            return fail(err);
        }
        let mut ctrl = StepCtrl::default();
        if rtol.is_finite() && rtol > 0.0 {
            ctrl.rtol = rtol;
        }
        if atol.is_finite() && atol > 0.0 {
            ctrl.atol = atol;
        }
        let samples = linspace(t0, t1, n_samples as usize);
        let trace = match oracle_integrate(eq, span, y0, &samples, &ctrl) {
            Ok(trace) => trace,
            Err(err) => return fail(err),
        };
        let mut csv = String::from("t,y,chart\n");
        for i in 0..trace.times.len() {
            let y = match trace.values[i] {
                ExtReal::Finite(v) => format!("{v}"),
                ExtReal::Infinity => "inf".to_string(),
            };
            csv.push_str(&format!("{},{},{}\n", trace.times[i], y, trace.charts[i]));
        }
        give_string(csv, out_csv)
    })
}

// ---------------------------------------------------------------------------
// Group actions
// ---------------------------------------------------------------------------

/// Transform the equation through the constant unimodular matrix
/// `[alpha, beta, gamma, delta]` (row-major) and write a new handle to
/// `out`.  The matrix must have determinant 1.
///
/// # Safety
/// `eq` must be a live handle; `matrix` must point to 4 readable doubles;
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn riclie_eq_transform_const(
    eq: *const RiclieEquation,
    matrix: *const f64,
    out: *mut *mut RiclieEquation,
) -> i32 {
    guarded(|| {
        if eq.is_null() {
            set_error("eq is a null pointer".into());
            return RICLIE_NULL_POINTER;
        }
        if matrix.is_null() {
            set_error("matrix is a null pointer".into());
            return RICLIE_NULL_POINTER;
        }
        if let Err(code) = require_out(out, "out") {
            return code;
        }
        let m = std::slice::from_raw_parts(matrix, 4);
        let mat = match Sl2::from_array([m[0], m[1], m[2], m[3]]) {
            Ok(mat) => mat,
            Err(err) => return fail(err),
        };
        match transform(&(*eq).inner, &Sl2Curve::constant(mat)) {
            Ok(moved) => {
                *out = Box::into_raw(Box::new(RiclieEquation { inner: moved }));
                RICLIE_OK
            }
            Err(err) => fail(err),
        }
    })
}

/// Apply the Möbius action of the unimodular matrix
/// `[alpha, beta, gamma, delta]` to the point `y` of the compactified line
/// and write the image to `out_y`.  Pass IEEE `INFINITY` for the point at
/// infinity; the image may likewise be `INFINITY`.
///
/// # Safety
/// `matrix` must point to 4 readable doubles; `out_y` must be valid for
/// writes.
#[no_mangle]
pub unsafe extern "C" fn riclie_mobius(
    matrix: *const f64,
    y: f64,
    out_y: *mut f64,
) -> i32 {
    guarded(|| {
        if matrix.is_null() {
            set_error("matrix is a null pointer".into());
            return RICLIE_NULL_POINTER;
        }
        if let Err(code) = require_out(out_y, "out_y") {
            return code;
        }
        let m = std::slice::from_raw_parts(matrix, 4);
        let mat = match Sl2::from_array([m[0], m[1], m[2], m[3]]) {
            Ok(mat) => mat,
            Err(err) => return fail(err),
        };
        let point = match ExtReal::from_f64(y) {
            Ok(v) => v,
            Err(err) => return fail(err),
        };
        *out_y = match mat.mobius(point) {
            ExtReal::Finite(v) => v,
            ExtReal::Infinity => f64::INFINITY,
        };
        RICLIE_OK
    })
}

// ---------------------------------------------------------------------------
// Special functions
// ---------------------------------------------------------------------------

/// The upper incomplete gamma function Γ(a, t) for `t > 0`, computed by
/// adaptive quadrature with a certified tail bound.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn riclie_upper_gamma(a: f64, t: f64, out: *mut f64) -> i32 {
    guarded(|| {
        if let Err(code) = require_out(out, "out") {
            return code;
        }
        match upper_gamma(a, t) {
            Ok(v) => {
                *out = v;
                RICLIE_OK
            }
            Err(err) => fail(err),
        }
    })
}
