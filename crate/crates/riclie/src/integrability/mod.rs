//! Detectors for solvable structure and the constructive reductions they license.
//!
//! The entry point is [`classify`]: a fixed cascade of grid-based tests that
//! sorts an equation into the first matching solvable case — already linear,
//! linear in the inverted variable, autonomous or separable, carrying a
//! constant particular solution, reducible to constant coefficients by a
//! positive rescaling of the dependent variable (the CTU condition), or
//! satisfying the special transport condition `d/dt(b₁/b₂) = −b₀`.  Every
//! asserted case comes with the residual that grounds it.
//!
//! The constructive side turns detections into [`ReductionPlan`]s — ordered
//! chains of variable changes ending in an equation solvable by quadrature —
//! and provides the classical reductions from known particular solutions,
//! the three-solution superposition formula, and named equation families
//! ([`fixtures`]) that exercise all of the above.

mod detect;
mod ft2;
mod reduce;
mod superpose;

pub mod fixtures;


pub use detect::{
    c2tu_family, ctu_test, ft2_special_m, linearization_test, scaling_curve, tu_transform,
    CtuEvidence, Ft2SpecialOutcome, LinearizationOutcome, TuOutcome,
};
pub use ft2::{ft2_system, Ft2Path};
pub use reduce::{
    plan_for, reduce_one_solution, reduce_two_solutions, second_order_to_riccati, Particular,
    PlanRun, Reduced, ReductionPlan, ReductionStep, StepLabel,
};
pub use superpose::{superposition, superposition_constant};

use crate::expr::Grid;
use crate::riccati::{Coeff, DynCoeff, RiccatiEq};
use crate::{Error, Result};

use serde::Serialize;

/// The solvable case an equation was sorted into.
///
/// Payloads carry the fitted constants: the constant coefficient vector for
/// autonomous/separable equations, the constant particular solution `c` (and
/// its reciprocal, the kernel invariant) for linearizable equations, and the
/// constant `K` of the rescaling condition for CTU-integrable ones.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "case")]
pub enum Case {
    /// `b₂ ≡ 0`: the equation is an inhomogeneous linear equation as it stands.
    LinearAlready,
    /// `b₀ ≡ 0`: the inverted variable `w = −1/y` satisfies a linear equation.
    InverseLinear,
    /// All three coefficients are constant.
    Autonomous { c: [f64; 3] },
    /// All three coefficients share one time-dependent factor: `bᵢ = cᵢ·d(t)`.
    Separable { c: [f64; 3], pivot: usize },
    /// A real constant `c` solves the equation; sending it to infinity
    /// linearizes.  `k_invariant = 1/c`.
    LinearizableByConstant { c: f64, k_invariant: f64 },
    /// `(b₁ + ½(ḃ₂/b₂ − ḃ₀/b₀))/√|b₀b₂|` is the constant `k`; a positive
    /// rescaling brings the equation to constant coefficients times a scale.
    #[serde(rename = "CTUIntegrable")]
    CtuIntegrable { k: f64 },
    /// `d/dt(b₁/b₂) = −b₀`: the transport system with `M = b₁/b₂` closes and
    /// the reducing scale `D` has a quadrature closed form.
    #[serde(rename = "FT2SpecialM")]
    Ft2SpecialM,
    /// A particular solution was supplied externally; reductions apply.
    KnownParticularSolution,
    /// No detector fired.
    Unclassified,
}

impl Case {
    /// Short lower-case name used in reports.
    pub fn name(&self) -> &'static str {
        match self {
            Case::LinearAlready => "linear-already",
            Case::InverseLinear => "inverse-linear",
            Case::Autonomous { .. } => "autonomous",
            Case::Separable { .. } => "separable",
            Case::LinearizableByConstant { .. } => "linearizable-by-constant",
            Case::CtuIntegrable { .. } => "ctu-integrable",
            Case::Ft2SpecialM => "ft2-special-m",
            Case::KnownParticularSolution => "known-particular-solution",
            Case::Unclassified => "unclassified",
        }
    }
}

/// A classification with the evidence that grounds it.
#[derive(Debug, Clone, Serialize)]
pub struct Classification {
    /// The detected case with its fitted constants.
    #[serde(flatten)]
    pub case: Case,
    /// Largest normalized residual of the asserted identity on the grid;
    /// `None` for [`Case::Unclassified`].
    pub residual: Option<f64>,
    /// The grid tolerance the detection used.
    pub tolerance: f64,
}

/// Evaluates a coefficient on every grid point.
pub(crate) fn sample_coeff(c: &Coeff, grid: &Grid) -> Result<Vec<f64>> {
    grid.points().iter().map(|&t| c.value(t)).collect()
}

/// Evaluates value and derivative of a coefficient on every grid point.
pub(crate) fn sample_jets(c: &Coeff, grid: &Grid) -> Result<Vec<(f64, f64)>> {
    grid.points().iter().map(|&t| c.jet(t)).collect()
}

fn max_abs(vals: &[f64]) -> f64 {
    vals.iter().fold(0.0, |m, v| m.max(v.abs()))
}

fn min_abs(vals: &[f64]) -> f64 {
    vals.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()))
}

/// Mean and largest deviation from the mean.
fn mean_dev(vals: &[f64]) -> (f64, f64) {
    let mean = vals.iter().sum::<f64>() / vals.len() as f64;
    let dev = vals.iter().fold(0.0f64, |m, v| m.max((v - mean).abs()));
    (mean, dev)
}

/// Sorts an equation into the first matching solvable case.
///
/// The cascade runs, in order: `b₂ ≡ 0`, `b₀ ≡ 0`, all-constant
/// coefficients, a shared time factor, a constant particular solution
/// ([`linearization_test`]), the rescaling condition ([`ctu_test`]), and the
/// transport condition ([`ft2_special_m`]).  Zero and constancy are meant on
/// the grid, relative to the grid tolerance.  Detectors whose preconditions
/// fail on this equation (for example the CTU test on a vanishing
/// coefficient) are skipped, not errors.
pub fn classify(eq: &RiccatiEq, grid: &Grid) -> Result<Classification> {
    if !grid.inside(eq.domain()) {
        return Err(Error::Invalid(format!(
            "classification grid {:?} leaves the equation domain {:?}",
            grid.span(),
            eq.domain()
        )));
    }
    let tol = grid.tolerance();
    let vals: Vec<Vec<f64>> = eq
        .b()
        .iter()
        .map(|c| sample_coeff(c, grid))
        .collect::<Result<_>>()?;
    let scale = 1.0 + vals.iter().map(|v| max_abs(v)).fold(0.0, f64::max);

    // Identically zero coefficients, highest structure first.
    let zero_residual = |i: usize| max_abs(&vals[i]) / scale;
    if zero_residual(2) <= tol {
        return Ok(Classification {
            case: Case::LinearAlready,
            residual: Some(zero_residual(2)),
            tolerance: tol,
        });
    }
    if zero_residual(0) <= tol {
        return Ok(Classification {
            case: Case::InverseLinear,
            residual: Some(zero_residual(0)),
            tolerance: tol,
        });
    }

    // All three coefficients constant.
    {
        let fits: Vec<(f64, f64)> = vals.iter().map(|v| mean_dev(v)).collect();
        let worst = fits
            .iter()
            .map(|(m, d)| d / (1.0 + m.abs()))
            .fold(0.0, f64::max);
        if worst <= tol {
            return Ok(Classification {
                case: Case::Autonomous {
                    c: [fits[0].0, fits[1].0, fits[2].0],
                },
                residual: Some(worst),
                tolerance: tol,
            });
        }
    }

    // A shared time factor: bᵢ = cᵢ·b_pivot with constant ratios.
    if let Some((c, pivot, residual)) = separable_fit(&vals, tol) {
        return Ok(Classification {
            case: Case::Separable { c, pivot },
            residual: Some(residual),
            tolerance: tol,
        });
    }

    if let Some(lin) = linearization_test(eq, grid)? {
        return Ok(Classification {
            case: Case::LinearizableByConstant {
                c: lin.c,
                k_invariant: lin.k_invariant,
            },
            residual: Some(lin.residual),
            tolerance: tol,
        });
    }

    match ctu_test(eq, grid) {
        Ok(Some(ev)) => {
            return Ok(Classification {
                case: Case::CtuIntegrable { k: ev.k },
                residual: Some(ev.deviation),
                tolerance: tol,
            });
        }
        Ok(None) => {}
        Err(Error::Domain { .. }) | Err(Error::NonFinite { .. }) => {}
        Err(e) => return Err(e),
    }

    match ft2_special_m(eq, 0.0, grid) {
        Ok(Some(out)) => {
            return Ok(Classification {
                case: Case::Ft2SpecialM,
                residual: Some(out.residual),
                tolerance: tol,
            });
        }
        Ok(None) => {}
        Err(Error::Domain { .. }) | Err(Error::NonFinite { .. }) => {}
        Err(e) => return Err(e),
    }

    Ok(Classification {
        case: Case::Unclassified,
        residual: None,
        tolerance: tol,
    })
}

/// Fits `bᵢ = cᵢ·b_pivot` with constant `cᵢ`; the pivot is the coefficient
/// that stays farthest from zero on the grid.
fn separable_fit(vals: &[Vec<f64>], tol: f64) -> Option<([f64; 3], usize, f64)> {
    let pivot = (0..3).max_by(|&i, &j| {
        min_abs(&vals[i])
            .partial_cmp(&min_abs(&vals[j]))
            .unwrap_or(std::cmp::Ordering::Equal)
    })?;
    let pv = &vals[pivot];
    if min_abs(pv) <= tol * (1.0 + max_abs(pv)) {
        return None;
    }
    let mut c = [0.0f64; 3];
    let mut residual = 0.0f64;
    for i in 0..3 {
        if i == pivot {
            c[i] = 1.0;
            continue;
        }
        let ratios: Vec<f64> = vals[i].iter().zip(pv.iter()).map(|(a, p)| a / p).collect();
        let (mean, dev) = mean_dev(&ratios);
        let norm = dev / (1.0 + mean.abs());
        if norm > tol {
            return None;
        }
        c[i] = mean;
        residual = residual.max(norm);
    }
    Some((c, pivot, residual))
}

/// A coefficient defined by caller-supplied value and derivative closures.
pub(crate) struct FnCoeff {
    pub name: String,
    pub f: Box<dyn Fn(f64) -> Result<f64> + Send + Sync>,
    pub df: Box<dyn Fn(f64) -> Result<f64> + Send + Sync>,
}

impl DynCoeff for FnCoeff {
    fn value(&self, t: f64) -> Result<f64> {
        (self.f)(t)
    }

    fn deriv(&self, t: f64) -> Result<f64> {
        (self.df)(t)
    }

    fn describe(&self) -> String {
        self.name.clone()
    }
}

impl FnCoeff {
    pub fn coeff(self) -> Coeff {
        Coeff::Dyn(std::sync::Arc::new(self))
    }
}

/// A scalar sampled on a knot grid with exact knot derivatives, evaluated by
/// cubic Hermite interpolation.  Used to promote integrated quantities (the
/// transport scale `D`, tabulated particular solutions) into coefficients.
pub(crate) struct HermiteCoeff {
    name: String,
    ts: Vec<f64>,
    vs: Vec<f64>,
    dvs: Vec<f64>,
}

impl HermiteCoeff {
    /// Knots must be strictly monotone (either direction, normalized to
    /// increasing internally) with one value and one derivative each.
    pub fn new(name: String, ts: Vec<f64>, vs: Vec<f64>, dvs: Vec<f64>) -> Result<HermiteCoeff> {
        if ts.len() < 2 || ts.len() != vs.len() || ts.len() != dvs.len() {
            return Err(Error::Invalid(
                "tabulated coefficient needs at least two knots with matching values and slopes"
                    .into(),
            ));
        }
        let (ts, vs, dvs) = if ts[0] > ts[ts.len() - 1] {
            (
                ts.iter().rev().copied().collect::<Vec<_>>(),
                vs.iter().rev().copied().collect(),
                dvs.iter().rev().copied().collect(),
            )
        } else {
            (ts, vs, dvs)
        };
        if ts.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Invalid(
                "tabulated coefficient knots must be strictly monotone".into(),
            ));
        }
        if vs.iter().chain(dvs.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Invalid(
                "tabulated coefficient has a non-finite knot".into(),
            ));
        }
        Ok(HermiteCoeff { name, ts, vs, dvs })
    }

    pub fn coeff(self) -> Coeff {
        Coeff::Dyn(std::sync::Arc::new(self))
    }

    fn locate(&self, t: f64) -> Result<usize> {
        let n = self.ts.len();
        let slack = 1e-9 * (1.0 + self.ts[0].abs().max(self.ts[n - 1].abs()));
        if t < self.ts[0] - slack || t > self.ts[n - 1] + slack {
            return Err(Error::Domain {
                what: format!(
                    "{} is tabulated on [{}, {}]",
                    self.name,
                    self.ts[0],
                    self.ts[n - 1]
                ),
                t,
            });
        }
        let idx = match self.ts.binary_search_by(|x| x.total_cmp(&t)) {
            Ok(i) => i,
            Err(i) => i.saturating_sub(1),
        };
        Ok(idx.min(n - 2))
    }

    /// Hermite value and derivative on the containing segment.
    fn eval(&self, t: f64) -> Result<(f64, f64)> {
        let i = self.locate(t)?;
        let h = self.ts[i + 1] - self.ts[i];
        let s = (t - self.ts[i]) / h;
        let (v0, v1) = (self.vs[i], self.vs[i + 1]);
        let (d0, d1) = (self.dvs[i] * h, self.dvs[i + 1] * h);
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        let value = h00 * v0 + h10 * d0 + h01 * v1 + h11 * d1;
        let g00 = 6.0 * s * (s - 1.0);
        let g10 = (1.0 - s) * (1.0 - 3.0 * s);
        let g01 = 6.0 * s * (1.0 - s);
        let g11 = s * (3.0 * s - 2.0);
        let deriv = (g00 * v0 + g10 * d0 + g01 * v1 + g11 * d1) / h;
        Ok((value, deriv))
    }
}

impl DynCoeff for HermiteCoeff {
    fn value(&self, t: f64) -> Result<f64> {
        Ok(self.eval(t)?.0)
    }

    fn deriv(&self, t: f64) -> Result<f64> {
        Ok(self.eval(t)?.1)
    }

    fn describe(&self) -> String {
        format!(
            "{} (tabulated on [{}, {}], {} knots)",
            self.name,
            self.ts[0],
            self.ts[self.ts.len() - 1],
            self.ts.len()
        )
    }
}
