//! End-to-end tests that drive the compiled binary the way a user would:
//! write a job file, run a subcommand, parse the report, check the exit code.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str], dir: &Path, job: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_riclie"));
    if let Some(text) = job {
        let path = dir.join("job.json");
        std::fs::write(&path, text).expect("write job file");
        cmd.args(args).arg("--input").arg(&path);
    } else {
        cmd.args(args);
    }
    cmd.output().expect("binary runs")
}

fn report(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "expected success, got {:?}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("report is JSON")
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("process exits normally")
}

#[test]
fn classify_reports_the_rescaling_case_with_a_plan() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        &["classify"],
        dir.path(),
        Some(
            r#"{"equation": {"b0": "exp(t)", "b1": "3", "b2": "-4*exp(-t)",
                 "params": {}, "domain": [0.0, 2.0]}}"#,
        ),
    );
    let rep = report(&out);
    assert_eq!(rep["case"], "CTUIntegrable");
    let k = rep["evidence"]["k"].as_f64().unwrap();
    assert!((k - 1.0).abs() <= 1e-6, "k = {k}");
    assert!(rep["evidence"]["residual"].as_f64().unwrap() <= 1e-8);
    let plan: Vec<&str> = rep["suggested_plan"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap())
        .collect();
    assert_eq!(plan, ["curve", "time-reparam"]);
}

#[test]
fn classify_rejects_a_malformed_expression() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        &["classify"],
        dir.path(),
        Some(r#"{"equation": {"b0": "1 +", "b1": "0", "b2": "1", "params": {}, "domain": [0.0, 1.0]}}"#),
    );
    assert_eq!(exit_code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("error:"));
}

#[test]
fn classify_rejects_a_missing_job_file() {
    let out = Command::new(env!("CARGO_BIN_EXE_riclie"))
        .args(["classify", "--input", "/nonexistent/job.json"])
        .output()
        .expect("binary runs");
    assert_eq!(exit_code(&out), 2);
}

#[test]
fn solve_reduces_the_incomplete_gamma_family() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        &["solve"],
        dir.path(),
        Some(
            r#"{"equation": {"fixture": "hovy", "args": {"n": 2.0}},
                "y0": 2.0, "t_span": [0.5, 5.0], "samples": 46}"#,
        ),
    );
    let rep = report(&out);
    assert_eq!(rep["classification"]["case"], "LinearizableByConstant");
    assert_eq!(rep["method"], "particular-solution reduction");
    assert!(rep["oracle_error"].as_f64().unwrap() <= 1e-6);
    assert_eq!(rep["trace"]["t"].as_array().unwrap().len(), 46);
    assert_eq!(rep["samples"].as_u64().unwrap(), 46);
}

#[test]
fn solve_traces_through_a_pole_into_the_inverted_chart() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("trace.csv");
    let job = format!(
        r#"{{"equation": {{"b0": "1", "b1": "0", "b2": "1", "params": {{}}, "domain": [0.0, 2.0]}},
            "y0": 0.0, "samples": 101, "trace_csv": {:?}}}"#,
        csv_path.display().to_string()
    );
    let out = run(&["solve"], dir.path(), Some(&job));
    let rep = report(&out);
    assert_eq!(rep["method"], "autonomous closed form");
    assert!(rep["oracle_error"].as_f64().unwrap() <= 1e-6);

    let csv = std::fs::read_to_string(&csv_path).expect("trace CSV written");
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,y,chart"));
    let mut max_y = f64::NEG_INFINITY;
    let mut min_y = f64::INFINITY;
    let mut inverted = 0usize;
    for line in lines {
        let mut parts = line.split(',');
        let _t: f64 = parts.next().unwrap().parse().unwrap();
        let y_text = parts.next().unwrap();
        if y_text != "inf" {
            let y: f64 = y_text.parse().unwrap();
            max_y = max_y.max(y);
            min_y = min_y.min(y);
        }
        if parts.next() == Some("inverted") {
            inverted += 1;
        }
    }
    // tan(t) blows up at t = pi/2 and returns from -infinity.
    assert!(max_y > 50.0, "max y = {max_y}");
    assert!(min_y < -50.0, "min y = {min_y}");
    assert!(inverted > 0, "no inverted-chart samples near the pole");
}

#[test]
fn solve_without_an_initial_value_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        &["solve"],
        dir.path(),
        Some(r#"{"equation": {"b0": "1", "b1": "0", "b2": "1", "params": {}, "domain": [0.0, 1.0]}}"#),
    );
    assert_eq!(exit_code(&out), 2);
}

#[test]
fn solve_falls_back_to_the_oracle_when_unclassified() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        &["solve"],
        dir.path(),
        Some(
            r#"{"equation": {"b0": "1", "b1": "t", "b2": "t^2", "params": {}, "domain": [0.5, 2.0]},
                "y0": 0.2, "samples": 41}"#,
        ),
    );
    let rep = report(&out);
    assert_eq!(rep["classification"]["case"], "Unclassified");
    assert_eq!(rep["method"], "numerical-oracle");
    assert!(rep["oracle_error"].as_f64().unwrap() <= 1e-6);
    assert!(!rep["warnings"].as_array().unwrap().is_empty());
}

#[test]
fn solve_accepts_an_initial_value_at_infinity() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        &["solve"],
        dir.path(),
        Some(
            r#"{"equation": {"b0": "1", "b1": "0", "b2": "-1", "params": {}, "domain": [0.0, 2.0]},
                "y0": "inf", "samples": 21}"#,
        ),
    );
    let rep = report(&out);
    assert_eq!(rep["trace"]["y"][0], "inf");
    assert!(rep["oracle_error"].as_f64().unwrap() <= 1e-6);
}

#[test]
fn transform_swaps_coefficients_under_inversion() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        &["transform"],
        dir.path(),
        Some(
            r#"{"equation": {"b0": "t^2", "b1": "t", "b2": "0", "params": {}, "domain": [0.5, 2.0]},
                "curve": {"kind": "constant", "matrix": [0.0, -1.0, 1.0, 0.0]}}"#,
        ),
    );
    let rep = report(&out);
    for row in rep["transformed_samples"]["rows"].as_array().unwrap() {
        let row = row.as_array().unwrap();
        let t = row[0].as_f64().unwrap();
        let b0 = row[1].as_f64().unwrap();
        let b1 = row[2].as_f64().unwrap();
        let b2 = row[3].as_f64().unwrap();
        assert!(b0.abs() <= 1e-12, "b0({t}) = {b0}");
        assert!((b1 + t).abs() <= 1e-12, "b1({t}) = {b1}");
        assert!((b2 - t * t).abs() <= 1e-12, "b2({t}) = {b2}");
    }
}

#[test]
fn transform_applies_a_time_dependent_curve() {
    let dir = tempfile::tempdir().unwrap();
    // Conjugating by diag(e^(t/2), e^(-t/2)) rescales b0 and b2 and shifts b1
    // by the logarithmic derivative of the scale.
    let out = run(
        &["transform"],
        dir.path(),
        Some(
            r#"{"equation": {"b0": "1", "b1": "0", "b2": "1", "params": {}, "domain": [0.0, 1.0]},
                "curve": {"kind": "analytic", "alpha": "exp(t/2)", "beta": "0",
                          "gamma": "0", "delta": "exp(-t/2)"}}"#,
        ),
    );
    let rep = report(&out);
    for row in rep["transformed_samples"]["rows"].as_array().unwrap() {
        let row = row.as_array().unwrap();
        let t = row[0].as_f64().unwrap();
        let b0 = row[1].as_f64().unwrap();
        let b1 = row[2].as_f64().unwrap();
        let b2 = row[3].as_f64().unwrap();
        assert!((b0 - t.exp()).abs() <= 1e-9 * t.exp(), "b0({t}) = {b0}");
        assert!((b1 - 1.0).abs() <= 1e-9, "b1({t}) = {b1}");
        assert!((b2 - (-t).exp()).abs() <= 1e-9, "b2({t}) = {b2}");
    }
}

#[test]
fn transform_rejects_a_non_unimodular_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        &["transform"],
        dir.path(),
        Some(
            r#"{"equation": {"b0": "1", "b1": "0", "b2": "1", "params": {}, "domain": [0.0, 1.0]},
                "curve": {"kind": "constant", "matrix": [1.0, 0.0, 0.0, 2.0]}}"#,
        ),
    );
    assert_eq!(exit_code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("unimodular"));
}

#[test]
fn connect_transports_one_equation_onto_another() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("curve.csv");
    let job = format!(
        r#"{{"equation": {{"b0": "1", "b1": "0", "b2": "-1", "params": {{}}, "domain": [0.0, 1.5]}},
            "target": {{"b0": "1", "b1": "1", "b2": "-1", "params": {{}}, "domain": [0.0, 1.5]}},
            "samples": 61, "curve_csv": {:?}}}"#,
        csv_path.display().to_string()
    );
    let out = run(&["connect"], dir.path(), Some(&job));
    let rep = report(&out);
    assert!(rep["det_drift"].as_f64().unwrap() <= 1e-8);
    assert!(rep["coefficient_residual"].as_f64().unwrap() <= 1e-6);
    let final_matrix = rep["final_matrix"].as_array().unwrap();
    assert_eq!(final_matrix.len(), 4);

    let csv = std::fs::read_to_string(&csv_path).expect("curve CSV written");
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,alpha,beta,gamma,delta"));
    let first = lines.next().unwrap();
    let cells: Vec<f64> = first.split(',').map(|c| c.parse().unwrap()).collect();
    // The path starts at the identity.
    assert_eq!(&cells[1..], &[1.0, 0.0, 0.0, 1.0]);
    assert_eq!(csv.lines().count(), 62);
}

#[test]
fn connect_rejects_a_non_unimodular_start() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        &["connect"],
        dir.path(),
        Some(
            r#"{"equation": {"b0": "1", "b1": "0", "b2": "-1", "params": {}, "domain": [0.0, 1.0]},
                "target": {"b0": "0", "b1": "0", "b2": "1", "params": {}, "domain": [0.0, 1.0]},
                "x0": [2.0, 0.0, 0.0, 1.0]}"#,
        ),
    );
    assert_eq!(exit_code(&out), 2);
}

#[test]
fn compare_tabulates_errors_for_listed_initial_values() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        &["compare"],
        dir.path(),
        Some(
            r#"{"equation": {"fixture": "hovy", "args": {"n": 2.0}},
                "t_span": [0.5, 5.0], "samples": 31, "y0_list": [2.0, "inf"]}"#,
        ),
    );
    let rep = report(&out);
    let rows = rep["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0]["y0"].as_f64(), Some(2.0));
    assert_eq!(rows[1]["y0"], "inf");
    for row in rows {
        assert_eq!(row["method"], "particular-solution reduction");
        assert!(row["sup_error"].as_f64().unwrap() <= 1e-6);
    }
}

#[test]
fn compare_draws_reproducible_initial_values_from_the_seed() {
    let dir = tempfile::tempdir().unwrap();
    let job = r#"{"equation": {"b0": "1", "b1": "0", "b2": "-1", "params": {}, "domain": [0.0, 2.0]},
                  "samples": 21}"#;
    let first = run(&["compare", "--seed", "42"], dir.path(), Some(job));
    let second = run(&["compare", "--seed", "42"], dir.path(), Some(job));
    assert_eq!(first.stdout, second.stdout, "seeded reruns must be identical");
    let rep = report(&first);
    assert_eq!(rep["seed"].as_u64(), Some(42));
    let rows = rep["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 5);
    for row in rows {
        assert_eq!(row["method"], "autonomous closed form");
        assert!(row["sup_error"].as_f64().unwrap() <= 1e-6);
    }
}

#[test]
fn fixtures_lists_the_built_in_families() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["fixtures"], dir.path(), None);
    let rep = report(&out);
    let entries = rep.as_array().unwrap();
    assert_eq!(entries.len(), 6);
    let names: Vec<&str> = entries
        .iter()
        .map(|e| e["name"].as_str().unwrap())
        .collect();
    assert!(names.contains(&"kovalevskaya"));
    assert!(names.contains(&"rao-ukidave"));
    for entry in entries {
        assert!(entry["expected"]["case"].is_string());
        assert!(entry["equation"]["domain"].is_array());
    }
}

#[test]
fn fixtures_output_feeds_back_into_classify() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["fixtures"], dir.path(), None);
    let rep = report(&out);
    // The quadrature-defined family round-trips through its builder
    // reference; every other family round-trips through expression strings.
    for entry in rep.as_array().unwrap() {
        let name = entry["name"].as_str().unwrap();
        let job = serde_json::json!({"equation": entry["equation"]}).to_string();
        let classified = run(&["classify"], dir.path(), Some(&job));
        let class_rep = report(&classified);
        assert_eq!(
            class_rep["case"], entry["expected"]["case"],
            "fixture `{name}` does not classify as promised"
        );
    }
}

#[test]
fn fixtures_rejects_an_unknown_name() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["fixtures", "nosuch"], dir.path(), None);
    assert_eq!(exit_code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("known:"));
}

#[test]
fn reports_print_floats_in_scientific_notation() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        &["classify"],
        dir.path(),
        Some(
            r#"{"equation": {"b0": "exp(t)", "b1": "3", "b2": "-4*exp(-t)",
                 "params": {}, "domain": [0.0, 2.0]}}"#,
        ),
    );
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(
        text.contains("1.0000000000000000e0"),
        "floats must carry 17 significant digits: {text}"
    );
}
