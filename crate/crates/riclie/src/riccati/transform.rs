//! The action of unimodular curves on Riccati equations.
//!
//! A time-dependent linear-fractional change of variable
//! `y′ = (α·y + β) / (γ·y + δ)` (with `αδ − βγ = 1`) carries solutions of
//! `dy/dt = b0 + b1·y + b2·y²` onto solutions of another Riccati equation.
//! [`transform`] computes the new coefficients:
//!
//! ```text
//!     b2′ = δ²·b2 − δγ·b1 + γ²·b0 + γ·δ̇ − δ·γ̇
//!     b1′ = −2βδ·b2 + (αδ + βγ)·b1 − 2αγ·b0 + δ·α̇ − α·δ̇ + β·γ̇ − γ·β̇
//!     b0′ = β²·b2 − αβ·b1 + α²·b0 + α·β̇ − β·α̇
//! ```
//!
//! Transforming by `A` and then by `B` equals transforming once by the
//! pointwise matrix product `B·A`, and the identity curve leaves an equation
//! unchanged.  [`push_solution`] applies the same curve pointwise to solution
//! values, so a solved source equation immediately yields a solution of the
//! transformed one.

use std::sync::Arc;

use super::{Coeff, DynCoeff, RiccatiEq};
use crate::algebra::Sl2Curve;
use crate::expr::{Dual, Expr, Field};
use crate::solvers::SolutionTrace;
use crate::{Error, Result};

/// One row of the coefficient transformation, generic over the scalar.
///
/// `e` holds the curve entries `[α, β, γ, δ]`, `de` their time derivatives,
/// and `b` the source coefficients `[b0, b1, b2]`, all at a common time.
fn trans_row<S: Field>(row: usize, e: &[S; 4], de: &[S; 4], b: &[S; 3]) -> S {
    let [al, be, ga, dl] = *e;
    let [dal, dbe, dga, ddl] = *de;
    let [b0, b1, b2] = *b;
    let two = S::from_f64(2.0);
    match row {
        0 => be * be * b2 - al * be * b1 + al * al * b0 + al * dbe - be * dal,
        1 => {
            -(two * be * dl * b2) + (al * dl + be * ga) * b1 - two * al * ga * b0 + dl * dal
                - al * ddl
                + be * dga
                - ga * dbe
        }
        2 => dl * dl * b2 - dl * ga * b1 + ga * ga * b0 + ga * ddl - dl * dga,
        _ => unreachable!("coefficient row index out of range"),
    }
}

/// The same transformation rows built as expressions.
fn trans_row_sym(row: usize, e: &[Expr; 4], de: &[Expr; 4], b: &[Expr; 3]) -> Expr {
    let (al, be, ga, dl) = (&e[0], &e[1], &e[2], &e[3]);
    let (dal, dbe, dga, ddl) = (&de[0], &de[1], &de[2], &de[3]);
    let (b0, b1, b2) = (&b[0], &b[1], &b[2]);
    let two = Expr::number(2.0);
    match row {
        0 => {
            be.clone() * be.clone() * b2.clone() - al.clone() * be.clone() * b1.clone()
                + al.clone() * al.clone() * b0.clone()
                + al.clone() * dbe.clone()
                - be.clone() * dal.clone()
        }
        1 => {
            -(two.clone() * be.clone() * dl.clone() * b2.clone())
                + (al.clone() * dl.clone() + be.clone() * ga.clone()) * b1.clone()
                - two * al.clone() * ga.clone() * b0.clone()
                + dl.clone() * dal.clone()
                - al.clone() * ddl.clone()
                + be.clone() * dga.clone()
                - ga.clone() * dbe.clone()
        }
        2 => {
            dl.clone() * dl.clone() * b2.clone() - dl.clone() * ga.clone() * b1.clone()
                + ga.clone() * ga.clone() * b0.clone()
                + ga.clone() * ddl.clone()
                - dl.clone() * dga.clone()
        }
        _ => unreachable!("coefficient row index out of range"),
    }
}

/// A transformed coefficient evaluated through curve jets.
struct TransCoeff {
    curve: Sl2Curve,
    row: usize,
    b: [Coeff; 3],
}

impl DynCoeff for TransCoeff {
    fn value(&self, t: f64) -> Result<f64> {
        let (e, de) = self.curve.eval_jet(t)?;
        let b = [
            self.b[0].value(t)?,
            self.b[1].value(t)?,
            self.b[2].value(t)?,
        ];
        let v = trans_row::<f64>(self.row, &e, &de, &b);
        if !v.is_finite() {
            return Err(Error::NonFinite {
                what: format!("transformed coefficient b{}'", self.row),
                t,
            });
        }
        Ok(v)
    }

    fn deriv(&self, t: f64) -> Result<f64> {
        let (e, de, dde) = self.curve.eval_jet2(t)?;
        let mut ed = [Dual::constant(0.0); 4];
        let mut ded = [Dual::constant(0.0); 4];
        for i in 0..4 {
            ed[i] = Dual { re: e[i], eps: de[i] };
            ded[i] = Dual {
                re: de[i],
                eps: dde[i],
            };
        }
        let mut bd = [Dual::constant(0.0); 3];
        for i in 0..3 {
            let (v, dv) = self.b[i].jet(t)?;
            bd[i] = Dual { re: v, eps: dv };
        }
        let out = trans_row::<Dual<f64>>(self.row, &ed, &ded, &bd);
        if !out.all_finite() {
            return Err(Error::NonFinite {
                what: format!("derivative of transformed coefficient b{}'", self.row),
                t,
            });
        }
        Ok(out.eps)
    }

    fn describe(&self) -> String {
        format!(
            "<b{}' of ({}, {}, {}) under a curve>",
            self.row,
            self.b[0].describe(),
            self.b[1].describe(),
            self.b[2].describe()
        )
    }
}

/// Applies the change of variable `y′ = curve(t)·y` to an equation.
///
/// Returns the Riccati equation satisfied by `y′` (the linear-fractional
/// image of `y` under the curve).  When every source coefficient and every
/// curve entry has a closed form, the result is again closed-form; otherwise
/// the coefficients are procedural and evaluate through curve jets.  For
/// tabulated curves the result's domain is the intersection of the equation
/// domain with the curve's knot span.
pub fn transform(eq: &RiccatiEq, curve: &Sl2Curve) -> Result<RiccatiEq> {
    let mut domain = eq.domain();
    if let Some((lo, hi)) = curve.time_span() {
        domain.0 = domain.0.max(lo);
        domain.1 = domain.1.min(hi);
        if domain.0 >= domain.1 {
            return Err(Error::Precondition(format!(
                "curve span [{lo}, {hi}] does not overlap the equation domain [{}, {}]",
                eq.domain().0,
                eq.domain().1
            )));
        }
    }

    let sym_entries = curve.entry_exprs();
    let all_sym = eq.b().iter().all(|c| c.expr().is_some());
    if let (Some(entries), true) = (&sym_entries, all_sym) {
        let [al, be, ga, dl] = entries.clone();
        let des: [Expr; 4] = [
            al.derivative(),
            be.derivative(),
            ga.derivative(),
            dl.derivative(),
        ];
        let es = [al, be, ga, dl];
        let b: [Expr; 3] = [
            eq.b()[0].expr().expect("checked symbolic").clone(),
            eq.b()[1].expr().expect("checked symbolic").clone(),
            eq.b()[2].expr().expect("checked symbolic").clone(),
        ];
        let rows: Vec<Expr> = (0..3).map(|r| trans_row_sym(r, &es, &des, &b)).collect();
        let mut it = rows.into_iter();
        return RiccatiEq::new(
            it.next().expect("three rows"),
            it.next().expect("three rows"),
            it.next().expect("three rows"),
            domain,
        );
    }

    let mk = |row: usize| {
        Coeff::Dyn(Arc::new(TransCoeff {
            curve: curve.clone(),
            row,
            b: eq.b().clone(),
        }))
    };
    RiccatiEq::new(mk(0), mk(1), mk(2), domain)
}

/// Maps a solution trace of the source equation onto the transformed one.
///
/// Applies the curve pointwise: if `y(t)` solves `eq`, the returned trace
/// `y′(t) = curve(t)·y(t)` (linear-fractional action) solves
/// `transform(eq, curve)`.  Charts are re-derived from the mapped
/// magnitudes; step statistics do not carry over.
pub fn push_solution(curve: &Sl2Curve, trace: &SolutionTrace) -> Result<SolutionTrace> {
    let mut values = Vec::with_capacity(trace.times.len());
    for (&t, v) in trace.times.iter().zip(trace.values.iter()) {
        let m = curve.eval(t)?;
        values.push(m.mobius(*v));
    }
    Ok(SolutionTrace::from_values(trace.times.clone(), values))
}
