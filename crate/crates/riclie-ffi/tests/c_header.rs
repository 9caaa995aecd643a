//! Compiles and runs a small C program against the generated header and the
//! shared library, proving the ABI works end to end from C.

use std::path::PathBuf;
use std::process::Command;

const PROGRAM: &str = r#"
#include <math.h>
#include <stdio.h>
#include <string.h>
#include "riclie.h"

#define CHECK(cond) \
    do { \
        if (!(cond)) { \
            char *msg = riclie_last_error(); \
            fprintf(stderr, "FAILED %s:%d: %s (%s)\n", __FILE__, __LINE__, #cond, \
                    msg ? msg : "no error recorded"); \
            riclie_string_free(msg); \
            return 1; \
        } \
    } while (0)

int main(void) {
    CHECK(riclie_version() != NULL);

    RiclieEquation *eq = NULL;
    CHECK(riclie_eq_parse("1", "0", "-1", NULL, 0.0, 2.0, &eq) == RICLIE_OK);

    double lo = 0.0, hi = 0.0;
    CHECK(riclie_eq_domain(eq, &lo, &hi) == RICLIE_OK);
    CHECK(lo == 0.0 && hi == 2.0);

    char *report = NULL;
    CHECK(riclie_eq_classify_json(eq, 0, 0.0, &report) == RICLIE_OK);
    CHECK(strstr(report, "\"Autonomous\"") != NULL);
    riclie_string_free(report);

    CHECK(riclie_eq_solve_json(eq, 0.0, 0.0, 2.0, 21, 0.0, &report) == RICLIE_OK);
    CHECK(strstr(report, "autonomous closed form") != NULL);
    riclie_string_free(report);

    /* The point at infinity rides through solve as the string "inf". */
    CHECK(riclie_eq_solve_json(eq, INFINITY, 0.0, 2.0, 21, 0.0, &report) == RICLIE_OK);
    CHECK(strstr(report, "\"inf\"") != NULL);
    riclie_string_free(report);

    double image = 0.0;
    const double inversion[4] = {0.0, -1.0, 1.0, 0.0};
    CHECK(riclie_mobius(inversion, 2.0, &image) == RICLIE_OK);
    CHECK(fabs(image + 0.5) < 1e-15);
    CHECK(riclie_mobius(inversion, 0.0, &image) == RICLIE_OK);
    CHECK(isinf(image));

    const double stretched[4] = {1.0, 0.0, 0.0, 2.0};
    RiclieEquation *moved = NULL;
    CHECK(riclie_eq_transform_const(eq, stretched, &moved) == RICLIE_INVALID_INPUT);
    char *msg = riclie_last_error();
    CHECK(msg != NULL && strstr(msg, "unimodular") != NULL);
    riclie_string_free(msg);

    double gamma_val = 0.0;
    CHECK(riclie_upper_gamma(1.0, 2.0, &gamma_val) == RICLIE_OK);
    CHECK(fabs(gamma_val - exp(-2.0)) < 1e-12);

    riclie_eq_free(eq);
    puts("ok");
    return 0;
}
"#;

#[test]
fn c_program_drives_the_library_through_the_header() {
    let crate_dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let include_dir = crate_dir.join("include");
    // target/<profile>/deps/<test-bin> -> target/<profile>
    let profile_dir = std::env::current_exe()
        .expect("test binary path")
        .parent()
        .and_then(|p| p.parent())
        .expect("profile directory")
        .to_path_buf();
    assert!(
        profile_dir.join("libriclie_ffi.so").exists(),
        "shared library not built at {}",
        profile_dir.display()
    );

    let work = tempfile::tempdir().expect("temp dir");
    let source = work.path().join("smoke.c");
    let binary = work.path().join("smoke");
    std::fs::write(&source, PROGRAM).expect("write C source");

    let compile = Command::new("cc")
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(&include_dir)
        .arg(&source)
        .arg("-L")
        .arg(&profile_dir)
        .arg(format!("-Wl,-rpath,{}", profile_dir.display()))
        .arg("-lriclie_ffi")
        .arg("-lm")
        .arg("-o")
        .arg(&binary)
        .output()
        .expect("cc runs");
    assert!(
        compile.status.success(),
        "compilation failed:\n{}",
        String::from_utf8_lossy(&compile.stderr)
    );

    let run = Command::new(&binary).output().expect("smoke test runs");
    assert!(
        run.status.success(),
        "C smoke test failed:\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&run.stdout),
        String::from_utf8_lossy(&run.stderr)
    );
    assert_eq!(String::from_utf8_lossy(&run.stdout).trim(), "ok");
}
