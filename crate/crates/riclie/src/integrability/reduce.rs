//! Constructive reductions: given particular solutions or a classification,
//! build an executable chain of changes of variables ending in a stage that
//! the quadrature solvers handle directly.

use super::{scaling_curve, tu_transform, Case, Classification, FnCoeff, HermiteCoeff};
use crate::algebra::{ExtReal, HermiteCurve, Sl2, Sl2Curve};
use crate::expr::{Expr, Grid};
use crate::riccati::{push_solution, Coeff, RiccatiEq, TargetForm};
use crate::rk::StepCtrl;
use crate::solvers::{
    oracle_integrate, point_distance, solve_autonomous, solve_linear, LinearEq, SolutionTrace,
};
use crate::{Error, Result};

/// Residual budget for accepting a claimed particular solution and for the
/// oracle probe every constructed plan must pass.
pub const PLAN_TOL: f64 = 1e-6;

/// A known particular solution of a Riccati equation.
#[derive(Debug, Clone)]
pub enum Particular {
    /// A closed-form expression `y1(t)`.
    Sym(Expr),
    /// A sampled trace; every value must be finite, and the knots must be
    /// dense enough for its cubic interpolant to track the equation within
    /// the residual budget.
    Trace(SolutionTrace),
}

/// What a reduction step changes the variable into.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepLabel {
    /// A curve transformation `y' = mo(A(t))(y)`.
    Curve,
    /// The shift `y' = y − y1(t)` by a particular solution.
    ShiftBySolution,
    /// The inversion `y' = −1/y`.
    Invert,
    /// The cross-ratio chart `y' = (y − y1)/(y − y2)`.
    CrossRatio,
    /// No change of the dependent variable; the stage separates after
    /// reparametrising time by `τ = ∫ d`.
    TimeReparam,
}

/// The equation a reduction step lands on.
#[derive(Debug, Clone)]
pub enum Reduced {
    /// Still a full Riccati equation.
    Riccati(RiccatiEq),
    /// Constant coefficient ratios with a common time factor.
    Target(TargetForm),
    /// A first-order linear equation.
    Linear(LinearEq),
}

/// One step of a reduction plan.
#[derive(Debug, Clone)]
pub struct ReductionStep {
    /// What kind of change this step performs.
    pub label: StepLabel,
    /// The curve realizing the change, when it is linear-fractional;
    /// `None` for pure time reparametrisations.
    pub curve: Option<Sl2Curve>,
    /// The equation satisfied by the transformed variable.
    pub result: Reduced,
}

/// An ordered chain of changes of variables ending in a solvable stage.
#[derive(Debug, Clone)]
pub struct ReductionPlan {
    /// The steps, applied left to right.
    pub steps: Vec<ReductionStep>,
    /// Time interval on which every stage is defined.
    pub domain: (f64, f64),
}

/// The result of executing a reduction plan from one initial condition.
#[derive(Debug, Clone)]
pub struct PlanRun {
    /// The solution of the source equation at the requested samples.
    pub trace: SolutionTrace,
    /// Short description of the terminal solve.
    pub method: &'static str,
    /// Non-fatal observations from the terminal solve.
    pub warnings: Vec<String>,
}

impl ReductionPlan {
    /// Solves the source equation from `(t0, y0)` at the given samples by
    /// mapping the initial value through every step, solving the terminal
    /// stage by quadrature, and mapping the solution back.
    ///
    /// `samples` must be monotone away from `t0`.
    pub fn execute(&self, t0: f64, y0: ExtReal, samples: &[f64], rtol: f64) -> Result<PlanRun> {
        let last = self
            .steps
            .last()
            .ok_or_else(|| Error::Invalid("reduction plan has no steps".into()))?;

        let mut v = y0;
        for step in &self.steps {
            if let Some(curve) = &step.curve {
                v = curve.eval(t0)?.mobius(v);
            }
        }

        let (mut trace, method, warnings) = match &last.result {
            Reduced::Linear(lin) => match v {
                ExtReal::Finite(z0) => (
                    solve_linear(lin, t0, z0, samples, rtol)?,
                    "linear-integrating-factor",
                    Vec::new(),
                ),
                ExtReal::Infinity => {
                    // A linear stage has no quadratic term, so ∞ is one of
                    // its equilibria: the transformed solution never leaves.
                    let values = vec![ExtReal::Infinity; samples.len()];
                    (
                        SolutionTrace::from_values(samples.to_vec(), values),
                        "fixed-point-at-infinity",
                        Vec::new(),
                    )
                }
            },
            Reduced::Target(form) => {
                let out = solve_autonomous(form, t0, v, samples, rtol)?;
                (out.trace, out.method, out.warnings)
            }
            Reduced::Riccati(_) => {
                return Err(Error::Invalid(
                    "reduction plan does not end in a solvable stage".into(),
                ))
            }
        };

        for step in self.steps.iter().rev() {
            if let Some(curve) = &step.curve {
                trace = push_solution(&curve.inverse(), &trace)?;
            }
        }
        Ok(PlanRun { trace, method, warnings })
    }
}

/// A particular solution after verification: usable as a coefficient, with
/// the interval it covers and, for sampled inputs, its knot times.
struct Verified {
    coeff: Coeff,
    domain: (f64, f64),
    knots: Option<Vec<f64>>,
}

impl Particular {
    /// Verifies that this is a solution of `eq` within [`PLAN_TOL`].
    fn verified(&self, eq: &RiccatiEq) -> Result<Verified> {
        match self {
            Particular::Sym(e) => {
                let domain = eq.domain();
                let grid = Grid::default_for(domain)?;
                let mut worst = (0.0f64, domain.0);
                for &t in grid.points() {
                    let y = e.eval(t)?;
                    let dy = e.deriv(t)?;
                    let f = eq.rhs(t, y)?;
                    let r = (dy - f).abs() / (1.0 + f.abs());
                    if r > worst.0 {
                        worst = (r, t);
                    }
                }
                if worst.0 > PLAN_TOL {
                    return Err(Error::NotASolution {
                        residual: worst.0,
                        t: worst.1,
                        tol: PLAN_TOL,
                    });
                }
                Ok(Verified {
                    coeff: Coeff::Sym(e.clone()),
                    domain,
                    knots: None,
                })
            }
            Particular::Trace(trace) => {
                if trace.times.len() < 2 {
                    return Err(Error::Precondition(
                        "a sampled particular solution needs at least two knots".into(),
                    ));
                }
                let mut times = trace.times.clone();
                let mut values = Vec::with_capacity(times.len());
                for (t, v) in times.iter().zip(trace.values.iter()) {
                    match v.finite() {
                        Some(y) => values.push(y),
                        None => {
                            return Err(Error::Precondition(format!(
                                "sampled particular solution passes through infinity at \
                                 t = {t}; reduce on a span where it stays finite"
                            )))
                        }
                    }
                }
                if times[0] > times[times.len() - 1] {
                    times.reverse();
                    values.reverse();
                }
                let mut slopes = Vec::with_capacity(times.len());
                for (t, y) in times.iter().zip(values.iter()) {
                    slopes.push(eq.rhs(*t, *y)?);
                }
                let coeff = HermiteCoeff::new(
                    "sampled particular solution".into(),
                    times.clone(),
                    values,
                    slopes,
                )?
                .coeff();
                let mut worst = (0.0f64, times[0]);
                for w in times.windows(2) {
                    let tm = 0.5 * (w[0] + w[1]);
                    let (y, dy) = coeff.jet(tm)?;
                    let f = eq.rhs(tm, y)?;
                    let r = (dy - f).abs() / (1.0 + f.abs());
                    if r > worst.0 {
                        worst = (r, tm);
                    }
                }
                if worst.0 > PLAN_TOL {
                    return Err(Error::NotASolution {
                        residual: worst.0,
                        t: worst.1,
                        tol: PLAN_TOL,
                    });
                }
                let dom = eq.domain();
                let lo = times[0].max(dom.0);
                let hi = times[times.len() - 1].min(dom.1);
                if lo >= hi {
                    return Err(Error::Precondition(
                        "sampled particular solution does not overlap the equation domain"
                            .into(),
                    ));
                }
                Ok(Verified {
                    coeff,
                    domain: (lo, hi),
                    knots: Some(times),
                })
            }
        }
    }
}

/// Reduces `eq` using one particular solution: the shift `u = y − y1`
/// removes the inhomogeneous term, and the inversion `z = −1/u` makes the
/// result linear, solvable by two quadratures.
///
/// The returned plan has passed an oracle probe on one trajectory.
pub fn reduce_one_solution(eq: &RiccatiEq, y1: &Particular) -> Result<ReductionPlan> {
    let v1 = y1.verified(eq)?;
    let domain = v1.domain;

    let shift_curve = shift_by(&v1, eq, domain)?;
    let shifted_b1 = combine_shift_b1(eq.b1(), eq.b2(), &v1.coeff);
    let bernoulli = RiccatiEq::new(
        Coeff::constant(0.0),
        shifted_b1.clone(),
        eq.b2().clone(),
        domain,
    )?;
    let linear = LinearEq {
        a: eq.b2().clone(),
        b: shifted_b1.negated(),
    };

    let plan = ReductionPlan {
        steps: vec![
            ReductionStep {
                label: StepLabel::ShiftBySolution,
                curve: Some(shift_curve),
                result: Reduced::Riccati(bernoulli),
            },
            ReductionStep {
                label: StepLabel::Invert,
                curve: Some(Sl2Curve::constant(Sl2::new(0.0, -1.0, 1.0, 0.0)?)),
                result: Reduced::Linear(linear),
            },
        ],
        domain,
    };
    let anchor = v1.coeff.value(domain.0)?;
    probe_plan(eq, &plan, &[anchor])?;
    Ok(plan)
}

/// Reduces `eq` using two distinct particular solutions: the cross-ratio
/// chart `z = (y − y1)/(y − y2)` satisfies the homogeneous linear equation
/// `dz/dt = b2·(y1 − y2)·z`, solvable by a single quadrature.
pub fn reduce_two_solutions(
    eq: &RiccatiEq,
    y1: &Particular,
    y2: &Particular,
) -> Result<ReductionPlan> {
    let va = y1.verified(eq)?;
    let vb = y2.verified(eq)?;
    let domain = (va.domain.0.max(vb.domain.0), va.domain.1.min(vb.domain.1));
    if domain.0 >= domain.1 {
        return Err(Error::Precondition(
            "the two particular solutions have no common time interval".into(),
        ));
    }

    let grid = Grid::default_for(domain)?;
    for &t in grid.points() {
        let a = va.coeff.value(t)?;
        let b = vb.coeff.value(t)?;
        if (a - b).abs() <= 1e-9 * (1.0 + a.abs() + b.abs()) {
            return Err(Error::ZeroCrossing { what: "y1 - y2".into(), t });
        }
    }

    // Order so the difference under the square root is positive.
    let (hi, lo) = if va.coeff.value(domain.0)? > vb.coeff.value(domain.0)? {
        (va, vb)
    } else {
        (vb, va)
    };

    let curve = cross_ratio_curve(&hi, &lo, eq, domain)?;
    let diff = difference_coeff(&hi.coeff, &lo.coeff);
    let rate = product_coeff(eq.b2(), &diff);
    let plan = ReductionPlan {
        steps: vec![ReductionStep {
            label: StepLabel::CrossRatio,
            curve: Some(curve),
            result: Reduced::Linear(LinearEq {
                a: Coeff::constant(0.0),
                b: rate,
            }),
        }],
        domain,
    };
    let a1 = hi.coeff.value(domain.0)?;
    let a2 = lo.coeff.value(domain.0)?;
    probe_plan(eq, &plan, &[a1, a2])?;
    Ok(plan)
}

/// Builds a reduction plan for a classified equation, or `None` when the
/// classification does not come with a constructive reduction (including
/// the already-linear case, which needs no plan).
pub fn plan_for(
    eq: &RiccatiEq,
    class: &Classification,
    grid: &Grid,
) -> Result<Option<ReductionPlan>> {
    let domain = eq.domain();
    match &class.case {
        Case::LinearAlready => Ok(None),
        Case::InverseLinear => {
            // With b0 ≡ 0 the inverted variable w = −1/y is linear:
            // dw/dt = b2 − b1·w.
            let linear = LinearEq {
                a: eq.b2().clone(),
                b: eq.b1().negated(),
            };
            let plan = ReductionPlan {
                steps: vec![ReductionStep {
                    label: StepLabel::Invert,
                    curve: Some(Sl2Curve::constant(Sl2::new(0.0, -1.0, 1.0, 0.0)?)),
                    result: Reduced::Linear(linear),
                }],
                domain,
            };
            probe_plan(eq, &plan, &[])?;
            Ok(Some(plan))
        }
        Case::Autonomous { c } => {
            let plan = target_plan(TargetForm { d: Coeff::constant(1.0), c: *c }, domain);
            probe_plan(eq, &plan, &[])?;
            Ok(Some(plan))
        }
        Case::Separable { c, pivot } => {
            let plan = target_plan(
                TargetForm { d: eq.b()[*pivot].clone(), c: *c },
                domain,
            );
            probe_plan(eq, &plan, &[])?;
            Ok(Some(plan))
        }
        Case::LinearizableByConstant { c, .. } => {
            Ok(Some(reduce_one_solution(eq, &Particular::Sym(Expr::number(*c)))?))
        }
        Case::CtuIntegrable { k } => {
            let mid = 0.5 * (domain.0 + domain.1);
            let s0 = eq.b0().value(mid)?.signum();
            let s02 = (eq.b0().value(mid)? * eq.b2().value(mid)?).signum();
            let Some(outcome) = tu_transform(eq, 1.0, k * s0, s02, grid)? else {
                return Ok(None);
            };
            let curve = scaling_curve(&outcome.scale, domain, grid)?;
            let target_eq = outcome.target.to_equation(domain)?;
            let plan = ReductionPlan {
                steps: vec![
                    ReductionStep {
                        label: StepLabel::Curve,
                        curve: Some(curve),
                        result: Reduced::Riccati(target_eq),
                    },
                    ReductionStep {
                        label: StepLabel::TimeReparam,
                        curve: None,
                        result: Reduced::Target(outcome.target),
                    },
                ],
                domain,
            };
            probe_plan(eq, &plan, &[])?;
            Ok(Some(plan))
        }
        Case::Ft2SpecialM | Case::KnownParticularSolution | Case::Unclassified => Ok(None),
    }
}

fn target_plan(form: TargetForm, domain: (f64, f64)) -> ReductionPlan {
    ReductionPlan {
        steps: vec![ReductionStep {
            label: StepLabel::TimeReparam,
            curve: None,
            result: Reduced::Target(form),
        }],
        domain,
    }
}

/// Converts the second-order equation `ẍ + 2P(t)ẋ + F(t)x = 0` (with `F`
/// determined by the data `(P, φ)`) into the Riccati equation satisfied by
/// `ψ = ẋ/x`, returning it together with the particular solution `φ − P`.
pub fn second_order_to_riccati(
    p: &Expr,
    phi: &Expr,
    domain: (f64, f64),
) -> Result<(RiccatiEq, Expr)> {
    let b0 = phi.derivative() + phi.clone() * phi.clone()
        - p.derivative()
        - p.clone() * p.clone();
    let b1 = Expr::number(-2.0) * p.clone();
    let b2 = Expr::number(-1.0);
    let eq = RiccatiEq::new(b0, b1, b2, domain)?;
    let psi = phi.clone() - p.clone();

    let grid = Grid::default_for(domain)?;
    let mut worst = (0.0f64, domain.0);
    for &t in grid.points() {
        let y = psi.eval(t)?;
        let f = eq.rhs(t, y)?;
        let r = (psi.deriv(t)? - f).abs() / (1.0 + f.abs());
        if r > worst.0 {
            worst = (r, t);
        }
    }
    if worst.0 > 1e-9 {
        return Err(Error::Numerical(format!(
            "constructed particular solution misses the equation by {:.3e} at t = {}",
            worst.0, worst.1
        )));
    }
    Ok((eq, psi))
}

/// Checks a freshly built plan against the numerical oracle on one probe
/// trajectory; `avoid` lists values the probe start must stay away from.
fn probe_plan(eq: &RiccatiEq, plan: &ReductionPlan, avoid: &[f64]) -> Result<()> {
    let (lo, hi) = plan.domain;
    let base = avoid.first().copied().unwrap_or(0.0);
    let candidates = [base + 1.0, base + 2.5, base - 1.7, base + 0.3];
    let n = 9usize;
    let samples: Vec<f64> = (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect();

    let mut last_err: Option<Error> = None;
    for &y0 in &candidates {
        if avoid.iter().any(|a| (y0 - a).abs() < 0.1) {
            continue;
        }
        let run = match plan.execute(lo, ExtReal::Finite(y0), &samples, 1e-9) {
            Ok(r) => r,
            Err(e) => {
                last_err = Some(e);
                continue;
            }
        };
        let oracle = match oracle_integrate(
            eq,
            (lo, hi),
            ExtReal::Finite(y0),
            &samples,
            &StepCtrl::default(),
        ) {
            Ok(tr) => tr,
            Err(e) => {
                last_err = Some(e);
                continue;
            }
        };
        let mut dev = 0.0f64;
        let mut at = lo;
        for ((t, a), b) in samples
            .iter()
            .zip(run.trace.values.iter())
            .zip(oracle.values.iter())
        {
            let d = point_distance(*a, *b);
            if d > dev {
                dev = d;
                at = *t;
            }
        }
        if dev > PLAN_TOL {
            return Err(Error::Numerical(format!(
                "reduction plan failed its oracle probe: deviation {dev:.3e} at t = {at} \
                 (budget {PLAN_TOL:.1e})"
            )));
        }
        return Ok(());
    }
    Err(last_err.unwrap_or_else(|| {
        Error::Numerical("no probe trajectory clears the particular solutions".into())
    }))
}

/// The curve `((1, −y1), (0, 1))` performing the shift `y' = y − y1(t)`.
fn shift_by(y1: &Verified, eq: &RiccatiEq, domain: (f64, f64)) -> Result<Sl2Curve> {
    if let Some(e) = y1.coeff.expr() {
        return Sl2Curve::analytic(
            Expr::number(1.0),
            -e.clone(),
            Expr::number(0.0),
            Expr::number(1.0),
            domain,
        );
    }
    let knots = knots_or_uniform(y1.knots.as_deref(), domain);
    let mut mats = Vec::with_capacity(knots.len());
    let mut tangents = Vec::with_capacity(knots.len());
    for &t in &knots {
        let y = y1.coeff.value(t)?;
        let dy = eq.rhs(t, y)?;
        mats.push([1.0, -y, 0.0, 1.0]);
        tangents.push([0.0, -dy, 0.0, 0.0]);
    }
    Ok(Sl2Curve::tabulated(HermiteCurve::new(
        knots,
        mats,
        Some(tangents),
    )?))
}

/// The unit-determinant cross-ratio curve `((1, −y1), (1, −y2))/√(y1 − y2)`,
/// defined when `y1 > y2` throughout.
fn cross_ratio_curve(
    y1: &Verified,
    y2: &Verified,
    eq: &RiccatiEq,
    domain: (f64, f64),
) -> Result<Sl2Curve> {
    if let (Some(e1), Some(e2)) = (y1.coeff.expr(), y2.coeff.expr()) {
        let s = (e1.clone() - e2.clone()).sqrt();
        return Sl2Curve::analytic(
            Expr::number(1.0) / s.clone(),
            -e1.clone() / s.clone(),
            Expr::number(1.0) / s.clone(),
            -e2.clone() / s,
            domain,
        );
    }
    let knots = merged_knots(y1, y2, domain)?;
    let mut mats = Vec::with_capacity(knots.len());
    let mut tangents = Vec::with_capacity(knots.len());
    for &t in &knots {
        let a = y1.coeff.value(t)?;
        let b = y2.coeff.value(t)?;
        let da = eq.rhs(t, a)?;
        let db = eq.rhs(t, b)?;
        let diff = a - b;
        if diff <= 0.0 {
            return Err(Error::ZeroCrossing { what: "y1 - y2".into(), t });
        }
        let s = diff.sqrt();
        let ds = (da - db) / (2.0 * s);
        mats.push([1.0 / s, -a / s, 1.0 / s, -b / s]);
        tangents.push([
            -ds / (s * s),
            (-da * s + a * ds) / (s * s),
            -ds / (s * s),
            (-db * s + b * ds) / (s * s),
        ]);
    }
    Ok(Sl2Curve::tabulated(HermiteCurve::new(
        knots,
        mats,
        Some(tangents),
    )?))
}

fn merged_knots(a: &Verified, b: &Verified, domain: (f64, f64)) -> Result<Vec<f64>> {
    match (a.knots.as_deref(), b.knots.as_deref()) {
        (Some(x), Some(y)) => {
            if x.len() != y.len()
                || x.iter()
                    .zip(y.iter())
                    .any(|(p, q)| (p - q).abs() > 1e-12 * (1.0 + p.abs()))
            {
                return Err(Error::MismatchedTraces(
                    "the two sampled particular solutions use different time grids".into(),
                ));
            }
            Ok(restrict(x, domain))
        }
        (Some(x), None) | (None, Some(x)) => Ok(restrict(x, domain)),
        (None, None) => Ok(uniform_knots(domain)),
    }
}

fn knots_or_uniform(knots: Option<&[f64]>, domain: (f64, f64)) -> Vec<f64> {
    match knots {
        Some(ts) => restrict(ts, domain),
        None => uniform_knots(domain),
    }
}

fn restrict(ts: &[f64], domain: (f64, f64)) -> Vec<f64> {
    let slack = 1e-9 * (domain.1 - domain.0).max(1.0);
    ts.iter()
        .copied()
        .filter(|t| *t >= domain.0 - slack && *t <= domain.1 + slack)
        .collect()
}

fn uniform_knots(domain: (f64, f64)) -> Vec<f64> {
    let n = 257usize;
    (0..n)
        .map(|i| domain.0 + (domain.1 - domain.0) * i as f64 / (n - 1) as f64)
        .collect()
}

/// `b1 + 2·b2·y1`, symbolic when every ingredient is.
fn combine_shift_b1(b1: &Coeff, b2: &Coeff, y1: &Coeff) -> Coeff {
    if let (Some(e1), Some(e2), Some(ey)) = (b1.expr(), b2.expr(), y1.expr()) {
        return Coeff::Sym(e1.clone() + Expr::number(2.0) * e2.clone() * ey.clone());
    }
    let (b1v, b2v, yv) = (b1.clone(), b2.clone(), y1.clone());
    let (b1d, b2d, yd) = (b1.clone(), b2.clone(), y1.clone());
    FnCoeff {
        name: format!(
            "{} + 2*({})*({})",
            b1.describe(),
            b2.describe(),
            y1.describe()
        ),
        f: Box::new(move |t| Ok(b1v.value(t)? + 2.0 * b2v.value(t)? * yv.value(t)?)),
        df: Box::new(move |t| {
            let (_, db1) = b1d.jet(t)?;
            let (b2x, db2) = b2d.jet(t)?;
            let (yx, dy) = yd.jet(t)?;
            Ok(db1 + 2.0 * (db2 * yx + b2x * dy))
        }),
    }
    .coeff()
}

/// `y1 − y2`, symbolic when both are.
fn difference_coeff(y1: &Coeff, y2: &Coeff) -> Coeff {
    if let (Some(e1), Some(e2)) = (y1.expr(), y2.expr()) {
        return Coeff::Sym(e1.clone() - e2.clone());
    }
    let (av, bv) = (y1.clone(), y2.clone());
    let (ad, bd) = (y1.clone(), y2.clone());
    FnCoeff {
        name: format!("({}) - ({})", y1.describe(), y2.describe()),
        f: Box::new(move |t| Ok(av.value(t)? - bv.value(t)?)),
        df: Box::new(move |t| Ok(ad.deriv(t)? - bd.deriv(t)?)),
    }
    .coeff()
}

/// `a·b`, symbolic when both are.
fn product_coeff(a: &Coeff, b: &Coeff) -> Coeff {
    if let (Some(ea), Some(eb)) = (a.expr(), b.expr()) {
        return Coeff::Sym(ea.clone() * eb.clone());
    }
    let (av, bv) = (a.clone(), b.clone());
    let (ad, bd) = (a.clone(), b.clone());
    FnCoeff {
        name: format!("({})*({})", a.describe(), b.describe()),
        f: Box::new(move |t| Ok(av.value(t)? * bv.value(t)?)),
        df: Box::new(move |t| {
            let (x, dx) = ad.jet(t)?;
            let (y, dy) = bd.jet(t)?;
            Ok(dx * y + x * dy)
        }),
    }
    .coeff()
}
