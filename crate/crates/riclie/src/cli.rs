//! Command-line front end: JSON job files in, JSON reports and CSV traces out.
//!
//! A job file names an equation — three coefficient expression strings with a
//! domain, or a reference to a built-in family — and each subcommand adds
//! what it needs: an initial value for `solve`, a matrix curve for
//! `transform`, a second equation for `connect`, a list of initial values for
//! `compare`.  `classify` sorts an equation into a solvable case and suggests
//! the reduction it would use; `solve` prefers that reduction and always
//! cross-checks against the numerical oracle; `fixtures` prints the built-in
//! families as ready-to-run job files.
//!
//! Reports are JSON with every float printed in 17-significant-digit
//! scientific notation so reruns diff exactly; solution traces and connecting
//! curves are CSV.  Exit codes: 0 success (including an honest
//! "unclassified"), 2 input error, 3 numerical failure.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::algebra::{ExtReal, Sl2, Sl2Curve};
use crate::expr::{Expr, Grid};
use crate::integrability::{
    classify, fixtures, plan_for, Case, Classification, ReductionPlan,
};
use crate::liegroup::{solve_connect, GroupPath};
use crate::riccati::{transform, Coeff, RiccatiEq};
use crate::solvers::{
    oracle_integrate, point_distance, solve_linear, LinearEq, SolutionTrace, StepCtrl,
};
use crate::{Error, Result};

/// Output samples used when a job does not say how many it wants.
const DEFAULT_SAMPLES: usize = 101;

/// Initial values drawn for `compare` when the job lists none.
const COMPARE_DRAWS: usize = 5;

#[derive(Parser)]
#[command(
    name = "riclie",
    version,
    about = "Classify, transform, and solve time-dependent Riccati equations"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sort an equation into a solvable case and suggest a reduction.
    Classify(CommonArgs),
    /// Solve an initial-value problem, preferring analytic reductions.
    Solve(CommonArgs),
    /// Transform an equation through a curve of unimodular matrices.
    Transform(CommonArgs),
    /// Integrate the curve carrying one equation onto another.
    Connect(CommonArgs),
    /// Tabulate analytic solutions against the numerical oracle.
    Compare(CommonArgs),
    /// Print the built-in equation families as job files.
    Fixtures(FixturesArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Job file (JSON); standard input when omitted or `-`.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Report destination; standard output when omitted or `-`.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Relative tolerance for integration and plan execution.
    #[arg(long)]
    rtol: Option<f64>,
    /// Absolute tolerance for integration.
    #[arg(long)]
    atol: Option<f64>,
    /// Points in the classification grid.
    #[arg(long)]
    grid_points: Option<usize>,
    /// Tolerance for "is this quantity constant" decisions.
    #[arg(long)]
    tol_const: Option<f64>,
    /// Seed for randomly drawn initial values (overrides the job's seed).
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct FixturesArgs {
    /// Print only the named family.
    name: Option<String>,
    /// Report destination; standard output when omitted or `-`.
    #[arg(long)]
    output: Option<PathBuf>,
}

/// Entry point: parse arguments, run, map errors to the exit-code contract.
pub fn run() -> i32 {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err}");
            err.exit_code()
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Classify(args) => cmd_classify(&args),
        Command::Solve(args) => cmd_solve(&args),
        Command::Transform(args) => cmd_transform(&args),
        Command::Connect(args) => cmd_connect(&args),
        Command::Compare(args) => cmd_compare(&args),
        Command::Fixtures(args) => cmd_fixtures(&args),
    }
}

// ---------------------------------------------------------------------------
// Job schema
// ---------------------------------------------------------------------------

/// A parsed job file.  `equation` is required; everything else is read by
/// the subcommands that need it.
#[derive(Deserialize)]
struct JobSpec {
    equation: EquationSpec,
    #[serde(default)]
    y0: Option<ValueSpec>,
    #[serde(default)]
    y0_list: Option<Vec<ValueSpec>>,
    #[serde(default)]
    t_span: Option<[f64; 2]>,
    #[serde(default)]
    samples: Option<usize>,
    #[serde(default)]
    curve: Option<CurveSpec>,
    #[serde(default)]
    target: Option<EquationSpec>,
    #[serde(default)]
    x0: Option<[f64; 4]>,
    #[serde(default)]
    step: Option<StepSpec>,
    #[serde(default)]
    grid: Option<GridSpec>,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    trace_csv: Option<PathBuf>,
    #[serde(default)]
    curve_csv: Option<PathBuf>,
}

/// An equation given as coefficient expression strings, or as a reference to
/// a built-in family (`fixture` plus its `args`/`exprs`).
#[derive(Deserialize)]
struct EquationSpec {
    #[serde(default)]
    b0: Option<String>,
    #[serde(default)]
    b1: Option<String>,
    #[serde(default)]
    b2: Option<String>,
    #[serde(default)]
    params: BTreeMap<String, f64>,
    #[serde(default)]
    domain: Option<[f64; 2]>,
    #[serde(default)]
    fixture: Option<String>,
    #[serde(default)]
    args: BTreeMap<String, f64>,
    #[serde(default)]
    exprs: BTreeMap<String, String>,
}

impl EquationSpec {
    fn build(&self) -> Result<RiccatiEq> {
        if let Some(family) = &self.fixture {
            return build_fixture_equation(
                family,
                &self.args,
                &self.exprs,
                &self.params,
                self.domain,
            );
        }
        let (Some(b0), Some(b1), Some(b2)) = (&self.b0, &self.b1, &self.b2) else {
            return Err(Error::Invalid(
                "an equation needs b0, b1, and b2 expression strings (or a fixture reference)"
                    .into(),
            ));
        };
        let domain = self.domain.ok_or_else(|| {
            Error::Invalid("an equation needs a domain [t_lo, t_hi]".into())
        })?;
        RiccatiEq::parse(b0, b1, b2, &self.params, (domain[0], domain[1]))
    }
}

fn build_fixture_equation(
    family: &str,
    args: &BTreeMap<String, f64>,
    exprs: &BTreeMap<String, String>,
    params: &BTreeMap<String, f64>,
    domain: Option<[f64; 2]>,
) -> Result<RiccatiEq> {
    let arg = |key: &str| {
        args.get(key).copied().ok_or_else(|| {
            Error::Invalid(format!("fixture `{family}` needs the numeric argument `{key}`"))
        })
    };
    let expr = |key: &str| -> Result<Expr> {
        let src = exprs.get(key).ok_or_else(|| {
            Error::Invalid(format!("fixture `{family}` needs the expression `{key}`"))
        })?;
        Expr::parse(src, params)
    };
    let dom = || -> Result<(f64, f64)> {
        let d = domain.ok_or_else(|| {
            Error::Invalid(format!("fixture `{family}` needs a domain [t_lo, t_hi]"))
        })?;
        Ok((d[0], d[1]))
    };
    let fixture = match family {
        "allen-stein" => fixtures::allen_stein(expr("b0")?, expr("b2")?, arg("c")?, dom()?)?,
        "rao-ukidave" => {
            fixtures::rao_ukidave(arg("c")?, arg("k")?, expr("b0")?, expr("b1")?, dom()?)?
        }
        "kovalevskaya" => fixtures::kovalevskaya(expr("f")?, arg("l")?, arg("k")?, dom()?)?,
        "hong-xiang" => fixtures::hong_xiang(expr("g")?, arg("b")?, arg("c")?, dom()?)?,
        "hovy" => fixtures::hovy(arg("n")?)?,
        "ibragimov" => fixtures::ibragimov(expr("p")?, expr("q")?, arg("k")?, dom()?)?,
        other => {
            return Err(Error::Invalid(format!(
                "unknown fixture family `{other}`; known: allen-stein, rao-ukidave, \
                 kovalevskaya, hong-xiang, hovy, ibragimov"
            )))
        }
    };
    Ok(fixture.eq)
}

/// A number, or the string `"inf"` for the point at infinity.
#[derive(Deserialize, Clone)]
#[serde(untagged)]
enum ValueSpec {
    Number(f64),
    Text(String),
}

impl ValueSpec {
    fn to_ext(&self) -> Result<ExtReal> {
        match self {
            ValueSpec::Number(v) if v.is_finite() => Ok(ExtReal::Finite(*v)),
            ValueSpec::Number(v) => Err(Error::Invalid(format!(
                "an initial value must be finite or \"inf\", got {v}"
            ))),
            ValueSpec::Text(s) if s == "inf" => Ok(ExtReal::Infinity),
            ValueSpec::Text(s) => Err(Error::Invalid(format!(
                "an initial value must be a number or \"inf\", got \"{s}\""
            ))),
        }
    }
}

/// A transformation curve: a constant matrix or four expression strings.
#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
enum CurveSpec {
    Constant { matrix: [f64; 4] },
    Analytic {
        alpha: String,
        beta: String,
        gamma: String,
        delta: String,
    },
}

impl CurveSpec {
    fn build(&self, domain: (f64, f64), params: &BTreeMap<String, f64>) -> Result<Sl2Curve> {
        match self {
            CurveSpec::Constant { matrix: [a, b, c, d] } => {
                Ok(Sl2Curve::constant(Sl2::new(*a, *b, *c, *d)?))
            }
            CurveSpec::Analytic { alpha, beta, gamma, delta } => Sl2Curve::analytic(
                Expr::parse(alpha, params)?,
                Expr::parse(beta, params)?,
                Expr::parse(gamma, params)?,
                Expr::parse(delta, params)?,
                domain,
            ),
        }
    }

    fn echo(&self) -> Value {
        match self {
            CurveSpec::Constant { matrix } => json!({"kind": "constant", "matrix": matrix}),
            CurveSpec::Analytic { alpha, beta, gamma, delta } => json!({
                "kind": "analytic",
                "alpha": alpha, "beta": beta, "gamma": gamma, "delta": delta,
            }),
        }
    }
}

/// Partial step-control overrides; unset fields keep their defaults.
#[derive(Deserialize, Default, Clone)]
struct StepSpec {
    #[serde(default)]
    rtol: Option<f64>,
    #[serde(default)]
    atol: Option<f64>,
    #[serde(default)]
    h0: Option<f64>,
    #[serde(default)]
    hmax: Option<f64>,
    #[serde(default)]
    max_steps: Option<usize>,
}

/// Partial classification-grid overrides.
#[derive(Deserialize, Default, Clone)]
struct GridSpec {
    #[serde(default)]
    points: Option<usize>,
    #[serde(default)]
    tolerance: Option<f64>,
}

impl JobSpec {
    fn step_ctrl(&self, args: &CommonArgs) -> StepCtrl {
        let mut ctrl = StepCtrl::default();
        if let Some(step) = &self.step {
            if let Some(v) = step.rtol {
                ctrl.rtol = v;
            }
            if let Some(v) = step.atol {
                ctrl.atol = v;
            }
            if let Some(v) = step.h0 {
                ctrl.h0 = v;
            }
            if step.hmax.is_some() {
                ctrl.hmax = step.hmax;
            }
            if let Some(v) = step.max_steps {
                ctrl.max_steps = v;
            }
        }
        if let Some(v) = args.rtol {
            ctrl.rtol = v;
        }
        if let Some(v) = args.atol {
            ctrl.atol = v;
        }
        ctrl
    }

    fn grid(&self, args: &CommonArgs, eq: &RiccatiEq) -> Result<Grid> {
        let (lo, hi) = eq.domain();
        let spec = self.grid.clone().unwrap_or_default();
        let n = args
            .grid_points
            .or(spec.points)
            .unwrap_or(Grid::DEFAULT_POINTS);
        let tol = args
            .tol_const
            .or(spec.tolerance)
            .unwrap_or(Grid::DEFAULT_TOLERANCE);
        Grid::chebyshev(lo, hi, n, tol)
    }

    fn span(&self, eq: &RiccatiEq) -> (f64, f64) {
        match self.t_span {
            Some([a, b]) => (a, b),
            None => eq.domain(),
        }
    }

    fn sample_times(&self, span: (f64, f64)) -> Vec<f64> {
        linspace(span.0, span.1, self.samples.unwrap_or(DEFAULT_SAMPLES))
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let n = n.max(2);
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

fn cmd_classify(args: &CommonArgs) -> Result<()> {
    let job = read_job(args)?;
    let eq = job.equation.build()?;
    let grid = job.grid(args, &eq)?;
    let class = classify(&eq, &grid)?;
    let (plan, plan_error) = checked_plan(&eq, &class, &grid)?;
    let (case, evidence) = split_classification(&class);
    let mut report = json!({
        "equation": equation_json(&eq),
        "case": case,
        "evidence": evidence,
        "suggested_plan": plan.as_ref().map(plan_labels).unwrap_or(Value::Null),
    });
    if let Some(msg) = plan_error {
        report["plan_error"] = json!(msg);
    }
    write_report(&args.output, &report)
}

/// Builds the reduction plan, downgrading a failed verification probe to
/// "no plan" with an explanation: the classification is still sound, and
/// callers fall back to the oracle.
fn checked_plan(
    eq: &RiccatiEq,
    class: &Classification,
    grid: &Grid,
) -> Result<(Option<ReductionPlan>, Option<String>)> {
    match plan_for(eq, class, grid) {
        Ok(plan) => Ok((plan, None)),
        Err(err) if err.exit_code() == 3 => Ok((None, Some(err.to_string()))),
        Err(err) => Err(err),
    }
}

fn cmd_solve(args: &CommonArgs) -> Result<()> {
    let job = read_job(args)?;
    let eq = job.equation.build()?;
    let grid = job.grid(args, &eq)?;
    let ctrl = job.step_ctrl(args);
    let y0 = job
        .y0
        .as_ref()
        .ok_or_else(|| Error::Invalid("solve needs an initial value y0".into()))?
        .to_ext()?;
    let span = job.span(&eq);
    eq.check_span(span)?;
    let samples = job.sample_times(span);

    let class = classify(&eq, &grid)?;
    let (plan, plan_error) = checked_plan(&eq, &class, &grid)?;
    let analytic = analytic_trace(&eq, &class, plan.as_ref(), span.0, y0, &samples, ctrl.rtol)?;
    let oracle = oracle_integrate(&eq, span, y0, &samples, &ctrl)?;

    let (trace, method, integrator, mut warnings, oracle_error) = match analytic {
        Some(run) => {
            let err = max_trace_distance(&run.trace, &oracle);
            (run.trace, run.method, run.integrator, run.warnings, err)
        }
        None => {
            let mut tight = ctrl;
            tight.rtol = (ctrl.rtol * 1e-2).max(1e-13);
            tight.atol = (ctrl.atol * 1e-2).max(1e-306);
            let refined = oracle_integrate(&eq, span, y0, &samples, &tight)?;
            let err = max_trace_distance(&oracle, &refined);
            (
                oracle,
                "numerical-oracle".to_string(),
                "adaptive embedded pair on the compactified line".to_string(),
                vec!["no analytic reduction available; reporting the oracle against a tighter rerun".to_string()],
                err,
            )
        }
    };
    if let Some(msg) = plan_error {
        warnings.push(format!("reduction plan failed verification: {msg}"));
    }

    let (case, evidence) = split_classification(&class);
    let mut report = json!({
        "equation": equation_json(&eq),
        "classification": {"case": case, "evidence": evidence},
        "method": method,
        "integrator": integrator,
        "warnings": warnings,
        "t_span": [span.0, span.1],
        "samples": samples.len(),
        "oracle_error": oracle_error,
        "stats": trace.stats,
    });
    match &job.trace_csv {
        Some(path) => {
            write_file(path, &trace_csv(&trace))?;
            report["trace_csv"] = json!(path.display().to_string());
        }
        None => {
            report["trace"] = trace_json(&trace);
        }
    }
    write_report(&args.output, &report)
}

fn cmd_transform(args: &CommonArgs) -> Result<()> {
    let job = read_job(args)?;
    let eq = job.equation.build()?;
    let spec = job
        .curve
        .as_ref()
        .ok_or_else(|| Error::Invalid("transform needs a curve".into()))?;
    let curve = spec.build(eq.domain(), &job.equation.params)?;
    let moved = transform(&eq, &curve)?;

    let (lo, hi) = eq.domain();
    let probes = linspace(lo, hi, 9);
    let mut table = Vec::with_capacity(probes.len());
    for &t in &probes {
        table.push(json!([
            t,
            moved.b0().value(t)?,
            moved.b1().value(t)?,
            moved.b2().value(t)?,
        ]));
    }
    let report = json!({
        "equation": equation_json(&eq),
        "curve": spec.echo(),
        "transformed": equation_json(&moved),
        "transformed_samples": {"columns": ["t", "b0", "b1", "b2"], "rows": table},
    });
    write_report(&args.output, &report)
}

fn cmd_connect(args: &CommonArgs) -> Result<()> {
    let job = read_job(args)?;
    let eq = job.equation.build()?;
    let target = job
        .target
        .as_ref()
        .ok_or_else(|| Error::Invalid("connect needs a target equation".into()))?
        .build()?;
    let ctrl = job.step_ctrl(args);
    let x0 = job.x0.unwrap_or([1.0, 0.0, 0.0, 1.0]);
    let span = match job.t_span {
        Some([a, b]) => (a, b),
        None => {
            let lo = eq.domain().0.max(target.domain().0);
            let hi = eq.domain().1.min(target.domain().1);
            if lo >= hi {
                return Err(Error::Invalid(
                    "the source and target domains do not overlap; give a t_span".into(),
                ));
            }
            (lo, hi)
        }
    };
    let samples = job.sample_times(span);
    let path = solve_connect(&eq, &target, x0, span, &samples, &ctrl)?;

    // The transported coefficients must reproduce the target's; report the
    // largest normalized mismatch as an end-to-end quality check.
    let curve = path.to_curve()?;
    let moved = transform(&eq, &curve)?;
    let mut residual = 0.0f64;
    for &t in &path.times {
        for (got, want) in moved.b().iter().zip(target.b().iter()) {
            let g = got.value(t)?;
            let w = want.value(t)?;
            residual = residual.max((g - w).abs() / (1.0 + w.abs()));
        }
    }

    let mut report = json!({
        "equation": equation_json(&eq),
        "target": equation_json(&target),
        "x0": x0,
        "t_span": [span.0, span.1],
        "samples": samples.len(),
        "det_drift": path.det_drift,
        "coefficient_residual": residual,
        "final_matrix": path.final_matrix()?.to_array(),
        "stats": path.stats,
    });
    match &job.curve_csv {
        Some(p) => {
            write_file(p, &curve_csv(&path))?;
            report["curve_csv"] = json!(p.display().to_string());
        }
        None => {
            report["curve"] = curve_json(&path);
        }
    }
    write_report(&args.output, &report)
}

fn cmd_compare(args: &CommonArgs) -> Result<()> {
    let job = read_job(args)?;
    let eq = job.equation.build()?;
    let grid = job.grid(args, &eq)?;
    let ctrl = job.step_ctrl(args);
    let span = job.span(&eq);
    eq.check_span(span)?;
    let samples = job.sample_times(span);

    let class = classify(&eq, &grid)?;
    let (plan, _) = checked_plan(&eq, &class, &grid)?;

    let (initial_values, seed) = match &job.y0_list {
        Some(list) => (list.clone(), None),
        None => {
            let seed = args.seed.or(job.seed).unwrap_or(0);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let drawn = (0..COMPARE_DRAWS)
                .map(|_| ValueSpec::Number(rng.gen_range(-2.0..2.0)))
                .collect();
            (drawn, Some(seed))
        }
    };

    let mut rows = Vec::with_capacity(initial_values.len());
    for spec in &initial_values {
        let y0 = spec.to_ext()?;
        let row = match compare_row(&eq, &class, plan.as_ref(), span, y0, &samples, &ctrl) {
            Ok(row) => row,
            Err(err) => json!({"y0": ext_json(y0), "error": err.to_string()}),
        };
        rows.push(row);
    }

    let (case, evidence) = split_classification(&class);
    let mut report = json!({
        "equation": equation_json(&eq),
        "classification": {"case": case, "evidence": evidence},
        "t_span": [span.0, span.1],
        "samples": samples.len(),
        "rows": rows,
    });
    if let Some(seed) = seed {
        report["seed"] = json!(seed);
    }
    write_report(&args.output, &report)
}

fn compare_row(
    eq: &RiccatiEq,
    class: &Classification,
    plan: Option<&ReductionPlan>,
    span: (f64, f64),
    y0: ExtReal,
    samples: &[f64],
    ctrl: &StepCtrl,
) -> Result<Value> {
    let oracle = oracle_integrate(eq, span, y0, samples, ctrl)?;
    match analytic_trace(eq, class, plan, span.0, y0, samples, ctrl.rtol)? {
        Some(run) => Ok(json!({
            "y0": ext_json(y0),
            "method": run.method,
            "sup_error": max_trace_distance(&run.trace, &oracle),
        })),
        None => {
            let mut tight = *ctrl;
            tight.rtol = (ctrl.rtol * 1e-2).max(1e-13);
            tight.atol = (ctrl.atol * 1e-2).max(1e-306);
            let refined = oracle_integrate(eq, span, y0, samples, &tight)?;
            Ok(json!({
                "y0": ext_json(y0),
                "method": "numerical-oracle (self-check)",
                "sup_error": max_trace_distance(&oracle, &refined),
            }))
        }
    }
}

fn cmd_fixtures(args: &FixturesArgs) -> Result<()> {
    let list = fixtures::canonical()?;
    let mut entries = Vec::new();
    for fixture in &list {
        if let Some(name) = &args.name {
            if name != fixture.name {
                continue;
            }
        }
        entries.push(fixture_entry(fixture)?);
    }
    if entries.is_empty() {
        let known: Vec<&str> = list.iter().map(|f| f.name).collect();
        return Err(Error::Invalid(format!(
            "unknown fixture `{}`; known: {}",
            args.name.as_deref().unwrap_or(""),
            known.join(", ")
        )));
    }
    write_report(&args.output, &Value::Array(entries))
}

fn fixture_entry(fixture: &fixtures::Fixture) -> Result<Value> {
    let (lo, hi) = fixture.eq.domain();
    let equation = if fixture.name == "rao-ukidave" {
        // This family's quadratic coefficient is quadrature-defined and has
        // no closed form, so its job file references the builder instead of
        // carrying expression strings.
        json!({
            "fixture": "rao-ukidave",
            "exprs": {"b0": "1", "b1": "sin(t)"},
            "args": {"c": 4.0, "k": 0.5},
            "params": {},
            "domain": [lo, hi],
        })
    } else {
        let render = |c: &Coeff| -> Result<String> {
            c.expr().map(|e| e.render()).ok_or_else(|| {
                Error::Invalid(format!(
                    "fixture `{}` has a coefficient without a closed form",
                    fixture.name
                ))
            })
        };
        json!({
            "b0": render(fixture.eq.b0())?,
            "b1": render(fixture.eq.b1())?,
            "b2": render(fixture.eq.b2())?,
            "params": {},
            "domain": [lo, hi],
        })
    };
    Ok(json!({
        "name": fixture.name,
        "equation": equation,
        "expected": serde_json::to_value(&fixture.expected)
            .map_err(|e| Error::Invalid(format!("serializing fixture: {e}")))?,
    }))
}

// ---------------------------------------------------------------------------
// Solve pipeline shared by `solve` and `compare`
// ---------------------------------------------------------------------------

struct AnalyticRun {
    trace: SolutionTrace,
    method: String,
    integrator: String,
    warnings: Vec<String>,
}

/// Produces the analytic solution when the classification supports one:
/// direct quadratures for an already-linear equation, otherwise the
/// reduction plan.  `None` means the caller should fall back to the oracle.
fn analytic_trace(
    eq: &RiccatiEq,
    class: &Classification,
    plan: Option<&ReductionPlan>,
    t0: f64,
    y0: ExtReal,
    samples: &[f64],
    rtol: f64,
) -> Result<Option<AnalyticRun>> {
    if matches!(class.case, Case::LinearAlready) {
        let run = match y0 {
            ExtReal::Finite(v) => {
                let linear = LinearEq {
                    a: eq.b0().clone(),
                    b: eq.b1().clone(),
                };
                AnalyticRun {
                    trace: solve_linear(&linear, t0, v, samples, rtol)?,
                    method: "quadratures".into(),
                    integrator: "linear-integrating-factor".into(),
                    warnings: Vec::new(),
                }
            }
            // Infinity is a fixed point of every linear flow on the
            // projective line.
            ExtReal::Infinity => AnalyticRun {
                trace: SolutionTrace::from_values(
                    samples.to_vec(),
                    vec![ExtReal::Infinity; samples.len()],
                ),
                method: "quadratures".into(),
                integrator: "fixed-point-at-infinity".into(),
                warnings: Vec::new(),
            },
        };
        return Ok(Some(run));
    }
    let Some(plan) = plan else {
        return Ok(None);
    };
    let run = plan.execute(t0, y0, samples, rtol)?;
    Ok(Some(AnalyticRun {
        trace: run.trace,
        method: method_for_case(&class.case).into(),
        integrator: run.method.into(),
        warnings: run.warnings,
    }))
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

fn max_trace_distance(a: &SolutionTrace, b: &SolutionTrace) -> f64 {
    a.values
        .iter()
        .zip(b.values.iter())
        .map(|(x, y)| point_distance(*x, *y))
        .fold(0.0, f64::max)
}

// ---------------------------------------------------------------------------
// Report assembly
// ---------------------------------------------------------------------------

fn equation_json(eq: &RiccatiEq) -> Value {
    let (lo, hi) = eq.domain();
    json!({
        "b0": eq.b0().describe(),
        "b1": eq.b1().describe(),
        "b2": eq.b2().describe(),
        "domain": [lo, hi],
    })
}

/// Splits a serialized classification into its case tag and the evidence
/// map (fitted constants, residual, tolerance).
fn split_classification(class: &Classification) -> (Value, Value) {
    let value = serde_json::to_value(class).expect("classification serializes");
    let Value::Object(mut map) = value else {
        unreachable!("classification serializes to an object");
    };
    let case = map.remove("case").unwrap_or(Value::Null);
    (case, Value::Object(map))
}

fn plan_labels(plan: &ReductionPlan) -> Value {
    Value::Array(
        plan.steps
            .iter()
            .map(|s| serde_json::to_value(&s.label).expect("labels serialize"))
            .collect(),
    )
}

fn ext_json(v: ExtReal) -> Value {
    match v {
        ExtReal::Finite(x) => json!(x),
        ExtReal::Infinity => json!("inf"),
    }
}

fn trace_json(trace: &SolutionTrace) -> Value {
    json!({
        "t": trace.times,
        "y": trace.values.iter().map(|v| ext_json(*v)).collect::<Vec<_>>(),
        "chart": trace
            .charts
            .iter()
            .map(|c| c.to_string())
            .collect::<Vec<_>>(),
    })
}

fn curve_json(path: &GroupPath) -> Value {
    json!({
        "t": path.times,
        "matrix": path.mats,
    })
}

// ---------------------------------------------------------------------------
// Output formatting
// ---------------------------------------------------------------------------

/// 17-significant-digit scientific notation; reruns of the same job produce
/// byte-identical reports.
fn sci(x: f64) -> String {
    format!("{x:.16e}")
}

fn trace_csv(trace: &SolutionTrace) -> String {
    let mut out = String::from("t,y,chart\n");
    for i in 0..trace.times.len() {
        let y = match trace.values[i] {
            ExtReal::Finite(v) => sci(v),
            ExtReal::Infinity => "inf".to_string(),
        };
        out.push_str(&format!("{},{},{}\n", sci(trace.times[i]), y, trace.charts[i]));
    }
    out
}

fn curve_csv(path: &GroupPath) -> String {
    let mut out = String::from("t,alpha,beta,gamma,delta\n");
    for (t, m) in path.times.iter().zip(path.mats.iter()) {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            sci(*t),
            sci(m[0]),
            sci(m[1]),
            sci(m[2]),
            sci(m[3])
        ));
    }
    out
}

/// Pretty JSON with floats in 17-significant-digit scientific notation.
struct SciFormatter<'a> {
    pretty: serde_json::ser::PrettyFormatter<'a>,
}

impl SciFormatter<'_> {
    fn new() -> Self {
        SciFormatter {
            pretty: serde_json::ser::PrettyFormatter::new(),
        }
    }
}

impl serde_json::ser::Formatter for SciFormatter<'_> {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        write!(writer, "{value:.16e}")
    }

    fn begin_array<W>(&mut self, writer: &mut W) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        self.pretty.begin_array(writer)
    }

    fn end_array<W>(&mut self, writer: &mut W) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        self.pretty.end_array(writer)
    }

    fn begin_array_value<W>(&mut self, writer: &mut W, first: bool) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        self.pretty.begin_array_value(writer, first)
    }

    fn end_array_value<W>(&mut self, writer: &mut W) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        self.pretty.end_array_value(writer)
    }

    fn begin_object<W>(&mut self, writer: &mut W) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        self.pretty.begin_object(writer)
    }

    fn end_object<W>(&mut self, writer: &mut W) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        self.pretty.end_object(writer)
    }

    fn begin_object_key<W>(&mut self, writer: &mut W, first: bool) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        self.pretty.begin_object_key(writer, first)
    }

    fn begin_object_value<W>(&mut self, writer: &mut W) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        self.pretty.begin_object_value(writer)
    }

    fn end_object_value<W>(&mut self, writer: &mut W) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        self.pretty.end_object_value(writer)
    }
}

fn render_json(value: &Value) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SciFormatter::new());
    value
        .serialize(&mut ser)
        .expect("in-memory JSON serialization does not fail");
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}

// ---------------------------------------------------------------------------
// I/O plumbing
// ---------------------------------------------------------------------------

fn read_job(args: &CommonArgs) -> Result<JobSpec> {
    let text = match &args.input {
        Some(path) if path.as_os_str() != "-" => fs::read_to_string(path)
            .map_err(|e| Error::Invalid(format!("reading {}: {e}", path.display())))?,
        _ => {
            let mut buf = String::new();
            io::stdin()
                .read_to_string(&mut buf)
                .map_err(|e| Error::Invalid(format!("reading standard input: {e}")))?;
            buf
        }
    };
    serde_json::from_str(&text).map_err(|e| Error::Invalid(format!("job file: {e}")))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text)
        .map_err(|e| Error::Invalid(format!("writing {}: {e}", path.display())))
}

fn write_report(dest: &Option<PathBuf>, report: &Value) -> Result<()> {
    let text = render_json(report) + "\n";
    match dest {
        Some(path) if path.as_os_str() != "-" => write_file(path, &text),
        _ => {
            io::stdout()
                .write_all(text.as_bytes())
                .map_err(|e| Error::Invalid(format!("writing standard output: {e}")))
        }
    }
}
