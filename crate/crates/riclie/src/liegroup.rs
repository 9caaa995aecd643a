//! Integration in the unimodular group itself.
//!
//! A Riccati equation lifts to a linear matrix equation: its derived matrix
//! `a(t)` generates a fundamental path `Ȧ = a(t)·A`, `A(t0) = I`, and every
//! solution of the scalar equation is the linear-fractional action of `A(t)`
//! on its initial value.  [`solve_ela`] integrates this lift, renormalizing
//! the determinant after every accepted step, and [`GroupPath::reconstruct`]
//! recovers scalar solutions for arbitrary initial values — including the
//! point at infinity — from one integration.
//!
//! [`solve_connect`] integrates the companion transport system: given a
//! source and a target equation, the curve `W(t)` satisfying
//! `Ẇ = a'(t)·W − W·a(t)` carries solutions of the source onto solutions of
//! the target by the pointwise linear-fractional action.  Its determinant is
//! a first integral, so the reported drift doubles as an integration quality
//! check.  The resulting path converts into a tabulated curve with exact
//! tangents, ready for [`crate::riccati::transform`].

use crate::algebra::{mat_mul, mobius_raw, ExtReal, HermiteCurve, Sl2, Sl2Curve};
use crate::riccati::RiccatiEq;
use crate::rk::{integrate, OnAccept, StepCtrl, StepMode};
use crate::solvers::{SolutionTrace, TraceStats};
use crate::{Error, Result};

/// A matrix-valued path sampled on a time grid.
#[derive(Debug, Clone)]
pub struct GroupPath {
    /// Sample times, ordered along the direction of integration.
    pub times: Vec<f64>,
    /// Row-major matrix entries `[α, β, γ, δ]` at each sample.
    pub mats: Vec<[f64; 4]>,
    /// Exact time derivatives of the entries at each sample.
    pub tangents: Vec<[f64; 4]>,
    /// Largest deviation of the determinant from its initial value seen at
    /// any accepted step (measured before renormalization, when enabled).
    pub det_drift: f64,
    /// Integration diagnostics.
    pub stats: TraceStats,
}

impl GroupPath {
    /// The path as an interpolating curve with exact knot tangents.
    ///
    /// Knot order is normalized to increasing time; fails when fewer than
    /// two samples were recorded.
    pub fn to_curve(&self) -> Result<Sl2Curve> {
        let (times, mats, tangents) = if self.times.len() >= 2 && self.times[0] > self.times[self.times.len() - 1]
        {
            (
                self.times.iter().rev().copied().collect(),
                self.mats.iter().rev().copied().collect(),
                self.tangents.iter().rev().copied().collect(),
            )
        } else {
            (self.times.clone(), self.mats.clone(), self.tangents.clone())
        };
        Ok(Sl2Curve::tabulated(HermiteCurve::new(
            times,
            mats,
            Some(tangents),
        )?))
    }

    /// Scalar solution through `y0` at the path's initial time.
    ///
    /// Applies each sampled matrix to `y0` by the linear-fractional action;
    /// the action is scale-invariant, so determinant drift cancels out.
    pub fn reconstruct(&self, y0: ExtReal) -> SolutionTrace {
        let values = self.mats.iter().map(|m| mobius_raw(m, y0)).collect();
        let mut trace = SolutionTrace::from_values(self.times.clone(), values);
        trace.stats = self.stats;
        trace
    }

    /// The matrix at the last sample, renormalized to determinant one.
    pub fn final_matrix(&self) -> Result<Sl2> {
        let m = self
            .mats
            .last()
            .ok_or_else(|| Error::Invalid("empty group path".into()))?;
        Sl2::renormalized(m[0], m[1], m[2], m[3])
    }
}

fn det4(m: &[f64; 4]) -> f64 {
    m[0] * m[3] - m[1] * m[2]
}

/// Shared driver for both matrix systems.
fn run_matrix_system(
    rhs: &mut dyn FnMut(f64, &[f64; 4]) -> Result<[f64; 4]>,
    span: (f64, f64),
    x0: [f64; 4],
    samples: &[f64],
    ctrl: &StepCtrl,
    mode: StepMode,
    renormalize: bool,
) -> Result<GroupPath> {
    let det0 = det4(&x0);
    let mut times = Vec::with_capacity(samples.len());
    let mut mats: Vec<[f64; 4]> = Vec::with_capacity(samples.len());
    let mut sample_ts: Vec<f64> = Vec::with_capacity(samples.len());
    let mut det_drift = 0.0f64;

    let stats = {
        let mut on_sample = |t: f64, y: &[f64; 4]| -> Result<()> {
            times.push(t);
            mats.push(*y);
            sample_ts.push(t);
            Ok(())
        };
        let mut on_accept = |rec: &crate::rk::StepRecord<'_, 4>| -> Result<OnAccept<4>> {
            let d = det4(rec.y1);
            let drift = (d - det0).abs();
            if drift > det_drift {
                det_drift = drift;
            }
            if renormalize {
                if d <= 0.0 {
                    return Err(Error::Numerical(format!(
                        "fundamental-path determinant became nonpositive ({d}) at t = {}",
                        rec.t0 + rec.h
                    )));
                }
                let s = d.sqrt();
                let y = rec.y1;
                return Ok(OnAccept::Replace([
                    y[0] / s,
                    y[1] / s,
                    y[2] / s,
                    y[3] / s,
                ]));
            }
            Ok(OnAccept::Continue)
        };
        integrate(
            rhs,
            span,
            x0,
            ctrl,
            mode,
            samples,
            &mut on_sample,
            &mut on_accept,
        )?
    };

    // Exact tangents at the recorded samples, from the right-hand side.
    let mut tangents = Vec::with_capacity(mats.len());
    for (t, m) in sample_ts.iter().zip(mats.iter()) {
        tangents.push(rhs(*t, m)?);
    }

    Ok(GroupPath {
        times,
        mats,
        tangents,
        det_drift,
        stats: TraceStats {
            accepted_steps: stats.n_accepted,
            rejected_steps: stats.n_rejected,
            rhs_evals: stats.n_rhs,
            max_defect: stats.max_defect,
            chart_switches: 0,
        },
    })
}

pub(crate) fn solve_ela_mode(
    eq: &RiccatiEq,
    span: (f64, f64),
    samples: &[f64],
    ctrl: &StepCtrl,
    mode: StepMode,
) -> Result<GroupPath> {
    eq.check_span(span)?;
    let mut rhs = |t: f64, x: &[f64; 4]| -> Result<[f64; 4]> {
        let a = eq.derived_matrix(t)?;
        Ok(mat_mul(&a, x))
    };
    run_matrix_system(
        &mut rhs,
        span,
        [1.0, 0.0, 0.0, 1.0],
        samples,
        ctrl,
        mode,
        true,
    )
}

/// Integrates the fundamental path `Ȧ = a(t)·A`, `A(span.0) = I`.
///
/// `a(t)` is the equation's derived matrix.  After every accepted step the
/// state is renormalized to determinant one; the largest pre-renormalization
/// deviation is reported as `det_drift`.  Samples become the path's knots.
pub fn solve_ela(
    eq: &RiccatiEq,
    span: (f64, f64),
    samples: &[f64],
    ctrl: &StepCtrl,
) -> Result<GroupPath> {
    solve_ela_mode(eq, span, samples, ctrl, StepMode::Adaptive)
}

/// Integrates the transport system `Ẇ = a'(t)·W − W·a(t)` from `W(span.0) = x0`.
///
/// `a` and `a'` are the derived matrices of `eq` and `target`.  A solution
/// curve carries solutions of `eq` onto solutions of `target` under the
/// pointwise linear-fractional action, so the returned path (via
/// [`GroupPath::to_curve`]) feeds directly into
/// [`crate::riccati::transform`].  The determinant of `W` is a first
/// integral; `det_drift` reports how well the integration conserved it.  The
/// initial matrix must be unimodular.
pub fn solve_connect(
    eq: &RiccatiEq,
    target: &RiccatiEq,
    x0: [f64; 4],
    span: (f64, f64),
    samples: &[f64],
    ctrl: &StepCtrl,
) -> Result<GroupPath> {
    eq.check_span(span)?;
    target.check_span(span)?;
    let d0 = det4(&x0);
    if (d0 - 1.0).abs() > crate::algebra::SL2_DET_TOL {
        return Err(Error::NotUnimodular { det: d0 });
    }
    let mut rhs = |t: f64, x: &[f64; 4]| -> Result<[f64; 4]> {
        let a = eq.derived_matrix(t)?;
        let ap = target.derived_matrix(t)?;
        let left = mat_mul(&ap, x);
        let right = mat_mul(x, &a);
        Ok([
            left[0] - right[0],
            left[1] - right[1],
            left[2] - right[2],
            left[3] - right[3],
        ])
    };
    run_matrix_system(&mut rhs, span, x0, samples, ctrl, StepMode::Adaptive, false)
}
