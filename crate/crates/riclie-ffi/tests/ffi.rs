//! Exercises the C ABI from Rust: status codes, handle lifecycles, JSON
//! reports, and the per-thread error message.

use std::ffi::{c_char, CStr, CString};
use std::ptr;

use riclie_ffi::*;

fn cstr(s: &str) -> CString {
    CString::new(s).unwrap()
}

/// Takes ownership of a string returned through an out-pointer.
unsafe fn claim(ptr: *mut c_char) -> String {
    assert!(!ptr.is_null());
    let text = CStr::from_ptr(ptr).to_str().unwrap().to_string();
    riclie_string_free(ptr);
    text
}

unsafe fn parse(b0: &str, b1: &str, b2: &str, lo: f64, hi: f64) -> *mut RiclieEquation {
    let (b0, b1, b2) = (cstr(b0), cstr(b1), cstr(b2));
    let mut eq = ptr::null_mut();
    let status = riclie_eq_parse(
        b0.as_ptr(),
        b1.as_ptr(),
        b2.as_ptr(),
        ptr::null(),
        lo,
        hi,
        &mut eq,
    );
    assert_eq!(status, RICLIE_OK, "parse failed: {}", last_error_text());
    assert!(!eq.is_null());
    eq
}

fn last_error_text() -> String {
    let ptr = riclie_last_error();
    if ptr.is_null() {
        return String::from("(no error recorded)");
    }
    unsafe { claim(ptr) }
}

#[test]
fn version_is_a_static_string() {
    let ptr = riclie_version();
    assert!(!ptr.is_null());
    let text = unsafe { CStr::from_ptr(ptr) }.to_str().unwrap();
    assert_eq!(text, env!("CARGO_PKG_VERSION"));
}

#[test]
fn parse_and_domain_round_trip() {
    unsafe {
        let eq = parse("exp(t)", "3", "-4*exp(-t)", 0.0, 2.0);
        let (mut lo, mut hi) = (f64::NAN, f64::NAN);
        assert_eq!(riclie_eq_domain(eq, &mut lo, &mut hi), RICLIE_OK);
        assert_eq!((lo, hi), (0.0, 2.0));
        riclie_eq_free(eq);
    }
}

#[test]
fn parse_rejects_bad_syntax_with_a_message() {
    unsafe {
        let (b0, b1, b2) = (cstr("1 +"), cstr("0"), cstr("1"));
        let mut eq = ptr::null_mut();
        let status = riclie_eq_parse(
            b0.as_ptr(),
            b1.as_ptr(),
            b2.as_ptr(),
            ptr::null(),
            0.0,
            1.0,
            &mut eq,
        );
        assert_eq!(status, RICLIE_INVALID_INPUT);
        assert!(eq.is_null());
        assert!(last_error_text().contains("syntax"));
    }
}

#[test]
fn parse_rejects_null_pointers() {
    unsafe {
        let (b1, b2) = (cstr("0"), cstr("1"));
        let mut eq = ptr::null_mut();
        let status = riclie_eq_parse(
            ptr::null(),
            b1.as_ptr(),
            b2.as_ptr(),
            ptr::null(),
            0.0,
            1.0,
            &mut eq,
        );
        assert_eq!(status, RICLIE_NULL_POINTER);

        let b0 = cstr("1");
        let status = riclie_eq_parse(
            b0.as_ptr(),
            b1.as_ptr(),
            b2.as_ptr(),
            ptr::null(),
            0.0,
            1.0,
            ptr::null_mut(),
        );
        assert_eq!(status, RICLIE_NULL_POINTER);
    }
}

#[test]
fn parse_reads_named_parameters() {
    unsafe {
        let (b0, b1, b2) = (cstr("a*exp(t)"), cstr("3"), cstr("-4*exp(-t)"));
        let params = cstr(r#"{"a": 1.0}"#);
        let mut eq = ptr::null_mut();
        let status = riclie_eq_parse(
            b0.as_ptr(),
            b1.as_ptr(),
            b2.as_ptr(),
            params.as_ptr(),
            0.0,
            2.0,
            &mut eq,
        );
        assert_eq!(status, RICLIE_OK, "{}", last_error_text());
        riclie_eq_free(eq);
    }
}

#[test]
fn classify_reports_the_rescaling_case() {
    unsafe {
        let eq = parse("exp(t)", "3", "-4*exp(-t)", 0.0, 2.0);
        let mut out = ptr::null_mut();
        let status = riclie_eq_classify_json(eq, 0, 0.0, &mut out);
        assert_eq!(status, RICLIE_OK, "{}", last_error_text());
        let report: serde_json::Value = serde_json::from_str(&claim(out)).unwrap();
        assert_eq!(report["case"], "CTUIntegrable");
        assert!((report["evidence"]["k"].as_f64().unwrap() - 1.0).abs() <= 1e-6);
        assert_eq!(report["suggested_plan"][0], "curve");
        riclie_eq_free(eq);
    }
}

#[test]
fn solve_cross_checks_against_the_oracle() {
    unsafe {
        let eq = parse("1", "0", "-1", 0.0, 2.0);
        let mut out = ptr::null_mut();
        let status = riclie_eq_solve_json(eq, 0.0, 0.0, 2.0, 41, 0.0, &mut out);
        assert_eq!(status, RICLIE_OK, "{}", last_error_text());
        let report: serde_json::Value = serde_json::from_str(&claim(out)).unwrap();
        assert_eq!(report["method"], "autonomous closed form");
        assert!(report["oracle_error"].as_f64().unwrap() <= 1e-6);
        let t = report["t"].as_array().unwrap();
        let y = report["y"].as_array().unwrap();
        assert_eq!((t.len(), y.len()), (41, 41));
        // dy/dt = 1 - y^2 from 0 is tanh(t).
        let mid = y[20].as_f64().unwrap();
        assert!((mid - 1.0f64.tanh()).abs() <= 1e-8, "y(1) = {mid}");
        riclie_eq_free(eq);
    }
}

#[test]
fn solve_accepts_infinity_as_the_initial_point() {
    unsafe {
        let eq = parse("1", "0", "-1", 0.0, 2.0);
        let mut out = ptr::null_mut();
        let status = riclie_eq_solve_json(eq, f64::INFINITY, 0.0, 2.0, 21, 0.0, &mut out);
        assert_eq!(status, RICLIE_OK, "{}", last_error_text());
        let report: serde_json::Value = serde_json::from_str(&claim(out)).unwrap();
        assert_eq!(report["y"][0], "inf");
        // coth(t) comes back through finite values immediately.
        assert!(report["y"][10].is_number());
        riclie_eq_free(eq);
    }
}

#[test]
fn solve_rejects_nan_and_a_span_outside_the_domain() {
    unsafe {
        let eq = parse("1", "0", "-1", 0.0, 2.0);
        let mut out = ptr::null_mut();
        assert_eq!(
            riclie_eq_solve_json(eq, f64::NAN, 0.0, 2.0, 21, 0.0, &mut out),
            RICLIE_INVALID_INPUT
        );
        assert_eq!(
            riclie_eq_solve_json(eq, 0.0, 0.0, 5.0, 21, 0.0, &mut out),
            RICLIE_INVALID_INPUT
        );
        riclie_eq_free(eq);
    }
}

#[test]
fn oracle_csv_crosses_the_pole() {
    unsafe {
        let eq = parse("1", "0", "1", 0.0, 2.0);
        let mut out = ptr::null_mut();
        let status = riclie_eq_oracle_csv(eq, 0.0, 0.0, 2.0, 101, 0.0, 0.0, &mut out);
        assert_eq!(status, RICLIE_OK, "{}", last_error_text());
        let csv = claim(out);
        assert!(csv.starts_with("t,y,chart\n"));
        assert!(csv.contains("inverted"), "no inverted-chart rows:\n{csv}");
        assert_eq!(csv.lines().count(), 102);
        riclie_eq_free(eq);
    }
}

#[test]
fn transform_const_swaps_coefficients_under_inversion() {
    unsafe {
        let eq = parse("t^2", "t", "0", 0.5, 2.0);
        let matrix = [0.0, -1.0, 1.0, 0.0];
        let mut moved = ptr::null_mut();
        let status = riclie_eq_transform_const(eq, matrix.as_ptr(), &mut moved);
        assert_eq!(status, RICLIE_OK, "{}", last_error_text());

        // The image of dy/dt = t^2 + t*y under y -> -1/y is
        // dy/dt = -t*y + t^2*y^2; classify sees the inverse-linear shape.
        let mut out = ptr::null_mut();
        let status = riclie_eq_classify_json(moved, 0, 0.0, &mut out);
        assert_eq!(status, RICLIE_OK, "{}", last_error_text());
        let report: serde_json::Value = serde_json::from_str(&claim(out)).unwrap();
        assert_eq!(report["case"], "InverseLinear");

        riclie_eq_free(moved);
        riclie_eq_free(eq);
    }
}

#[test]
fn transform_const_rejects_a_non_unimodular_matrix() {
    unsafe {
        let eq = parse("1", "0", "1", 0.0, 1.0);
        let matrix = [1.0, 0.0, 0.0, 2.0];
        let mut moved = ptr::null_mut();
        let status = riclie_eq_transform_const(eq, matrix.as_ptr(), &mut moved);
        assert_eq!(status, RICLIE_INVALID_INPUT);
        assert!(last_error_text().contains("unimodular"));
        riclie_eq_free(eq);
    }
}

#[test]
fn mobius_action_handles_infinity_in_and_out() {
    unsafe {
        let inversion = [0.0, -1.0, 1.0, 0.0];
        let mut image = f64::NAN;
        assert_eq!(riclie_mobius(inversion.as_ptr(), 2.0, &mut image), RICLIE_OK);
        assert!((image + 0.5).abs() <= 1e-15, "got {image}");

        assert_eq!(
            riclie_mobius(inversion.as_ptr(), f64::INFINITY, &mut image),
            RICLIE_OK
        );
        assert_eq!(image, 0.0);

        assert_eq!(riclie_mobius(inversion.as_ptr(), 0.0, &mut image), RICLIE_OK);
        assert!(image.is_infinite());

        assert_eq!(
            riclie_mobius(inversion.as_ptr(), f64::NAN, &mut image),
            RICLIE_INVALID_INPUT
        );
    }
}

#[test]
fn upper_gamma_matches_the_exponential_integral() {
    unsafe {
        let mut value = f64::NAN;
        assert_eq!(riclie_upper_gamma(1.0, 2.0, &mut value), RICLIE_OK);
        assert!((value - (-2.0f64).exp()).abs() <= 1e-12, "got {value}");
        assert_eq!(
            riclie_upper_gamma(1.0, -1.0, &mut value),
            RICLIE_NUMERICAL,
            "t <= 0 is outside the supported window"
        );
    }
}

#[test]
fn string_free_ignores_null() {
    unsafe { riclie_string_free(ptr::null_mut()) };
}

#[test]
fn last_error_is_null_before_any_failure() {
    // Runs on its own thread, so no earlier failure can pollute the slot.
    std::thread::spawn(|| {
        let ptr = riclie_last_error();
        assert!(ptr.is_null());
    })
    .join()
    .unwrap();
}
