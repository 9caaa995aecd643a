//! Grid-based detectors for the rescaling and transport conditions, the
//! constant-solution linearization test, and the constructors they license.

use super::{sample_coeff, sample_jets, FnCoeff};
use crate::algebra::{HermiteCurve, Sl2, Sl2Curve};
use crate::expr::{Expr, Grid};
use crate::riccati::{transform, Coeff, RiccatiEq, TargetForm};
use crate::solvers::{quad, LinearEq};
use crate::{Error, Result};

/// Tolerances for the quadratures backing detector-built coefficients; a
/// factor tighter than any grid tolerance they are compared at.
const QUAD_RTOL: f64 = 1e-12;
const QUAD_ATOL: f64 = 1e-14;

/// Evidence returned by [`ctu_test`]: the fitted constant and how far the
/// grid values stray from it.
#[derive(Debug, Clone, Copy)]
pub struct CtuEvidence {
    /// Mean of the test expression over the grid.
    pub k: f64,
    /// Largest normalized deviation from the mean.
    pub deviation: f64,
}

/// The rescaling integrability test: is
/// `(b₁ + ½(ḃ₂/b₂ − ḃ₀/b₀)) / √|b₀b₂|` constant on the grid?
///
/// Returns the fitted constant when the normalized deviation stays within
/// the grid tolerance, `None` otherwise.  A grid point where `b₀` or `b₂`
/// vanishes is a domain error: the test does not apply there and the linear
/// reductions should be used instead.
pub fn ctu_test(eq: &RiccatiEq, grid: &Grid) -> Result<Option<CtuEvidence>> {
    let j0 = sample_jets(eq.b0(), grid)?;
    let j2 = sample_jets(eq.b2(), grid)?;
    let v1 = sample_coeff(eq.b1(), grid)?;
    let mut vals = Vec::with_capacity(v1.len());
    for (((b0, db0), (b2, db2)), (b1, t)) in j0
        .iter()
        .zip(j2.iter())
        .zip(v1.iter().zip(grid.points().iter()))
    {
        if *b0 == 0.0 || *b2 == 0.0 {
            return Err(Error::Domain {
                what: "the rescaling test needs b0 and b2 nonvanishing".into(),
                t: *t,
            });
        }
        let val = (b1 + 0.5 * (db2 / b2 - db0 / b0)) / (b0 * b2).abs().sqrt();
        if !val.is_finite() {
            return Err(Error::NonFinite {
                what: "rescaling test expression".into(),
                t: *t,
            });
        }
        vals.push(val);
    }
    let mean = vals.iter().sum::<f64>() / vals.len() as f64;
    let dev = vals.iter().fold(0.0f64, |m, v| m.max((v - mean).abs()));
    let norm = dev / (1.0 + mean.abs());
    if norm <= grid.tolerance() {
        Ok(Some(CtuEvidence {
            k: mean,
            deviation: norm,
        }))
    } else {
        Ok(None)
    }
}

/// A verified rescaling to a constant-coefficient target.
#[derive(Debug, Clone)]
pub struct TuOutcome {
    /// The target `dy'/dt = D(t)(c0 + c1·y' + c2·y'²)`.
    pub target: TargetForm,
    /// The positive scale `G(t) = √(b₂c₀/(b₀c₂))` with `y' = G·y`.
    pub scale: Coeff,
    /// Largest normalized residual of the defining condition on the grid.
    pub residual: f64,
}

/// Tests whether `y' = G(t)·y` carries the equation onto
/// `D(t)(c0 + c1·y' + c2·y'²)` for the prescribed constants, and constructs
/// the transformation when it does.
///
/// The scale is `G = √(b₂c₀/(b₀c₂))` and the time factor is
/// `D = κ√(b₀b₂/(c₀c₂))` with `κ = sg(b₀/c₀)`; the defining condition is
/// `(b₁ + ½(ḃ₂/b₂ − ḃ₀/b₀))·√(c₀c₂/(b₀b₂)) = κ·c₁` on the grid.  Requires
/// `b₀b₂ ≠ 0` on the grid, `c₀c₂ ≠ 0`, and `sign(b₀b₂) = sign(c₀c₂)`;
/// returns `None` (with no transformation) when the condition fails by more
/// than the grid tolerance.
pub fn tu_transform(
    eq: &RiccatiEq,
    c0: f64,
    c1: f64,
    c2: f64,
    grid: &Grid,
) -> Result<Option<TuOutcome>> {
    if c0 * c2 == 0.0 || !(c0 * c2).is_finite() || !c1.is_finite() {
        return Err(Error::Precondition(format!(
            "target constants need c0*c2 nonzero and finite, got ({c0}, {c1}, {c2})"
        )));
    }
    let j0 = sample_jets(eq.b0(), grid)?;
    let j2 = sample_jets(eq.b2(), grid)?;
    let v1 = sample_coeff(eq.b1(), grid)?;
    let kappa = (j0[0].0 / c0).signum();
    let mut residual = 0.0f64;
    for (((b0, db0), (b2, db2)), (b1, t)) in j0
        .iter()
        .zip(j2.iter())
        .zip(v1.iter().zip(grid.points().iter()))
    {
        let prod = b0 * b2;
        if prod == 0.0 {
            return Err(Error::Domain {
                what: "the rescaling transformation needs b0·b2 nonvanishing".into(),
                t: *t,
            });
        }
        if (prod > 0.0) != (c0 * c2 > 0.0) {
            return Err(Error::Precondition(format!(
                "sign(b0·b2) = {} at t = {t} is incompatible with sign(c0·c2) = {}",
                prod.signum(),
                (c0 * c2).signum()
            )));
        }
        let lhs = (b1 + 0.5 * (db2 / b2 - db0 / b0)) * (c0 * c2 / prod).sqrt();
        residual = residual.max((lhs - kappa * c1).abs() / (1.0 + c1.abs()));
    }
    if residual > grid.tolerance() {
        return Ok(None);
    }

    let d_coeff = sqrt_product_coeff(
        eq.b0(),
        eq.b2(),
        kappa,
        1.0 / (c0 * c2),
        format!("{kappa}*sqrt(b0*b2/{})", c0 * c2),
    );
    let g_coeff = sqrt_ratio_coeff(
        eq.b2(),
        eq.b0(),
        c0 / c2,
        format!("sqrt(b2*{}/(b0*{}))", c0, c2),
    );
    Ok(Some(TuOutcome {
        target: TargetForm {
            d: d_coeff,
            c: [c0, c1, c2],
        },
        scale: g_coeff,
        residual,
    }))
}

/// `κ·√(a·b·scale)` as a coefficient, symbolic when both factors are.
fn sqrt_product_coeff(a: &Coeff, b: &Coeff, kappa: f64, scale: f64, name: String) -> Coeff {
    if let (Some(ae), Some(be)) = (a.expr(), b.expr()) {
        let inner = ae.clone() * be.clone() * Expr::number(scale);
        return Coeff::Sym(Expr::number(kappa) * inner.sqrt());
    }
    let (a1, b1) = (a.clone(), b.clone());
    let (a2, b2) = (a.clone(), b.clone());
    FnCoeff {
        name,
        f: Box::new(move |t| {
            let u = a1.value(t)? * b1.value(t)? * scale;
            sqrt_checked(u, t).map(|s| kappa * s)
        }),
        df: Box::new(move |t| {
            let (av, da) = a2.jet(t)?;
            let (bv, db) = b2.jet(t)?;
            let u = av * bv * scale;
            let du = (da * bv + av * db) * scale;
            Ok(kappa * du / (2.0 * sqrt_checked(u, t)?))
        }),
    }
    .coeff()
}

/// `√(num·scale/den)` as a coefficient, symbolic when both parts are.
fn sqrt_ratio_coeff(num: &Coeff, den: &Coeff, scale: f64, name: String) -> Coeff {
    if let (Some(ne), Some(de)) = (num.expr(), den.expr()) {
        let inner = ne.clone() * Expr::number(scale) / de.clone();
        return Coeff::Sym(inner.sqrt());
    }
    let (n1, d1) = (num.clone(), den.clone());
    let (n2, d2) = (num.clone(), den.clone());
    FnCoeff {
        name,
        f: Box::new(move |t| {
            let dv = d1.value(t)?;
            if dv == 0.0 {
                return Err(Error::Domain {
                    what: "rescaling denominator vanishes".into(),
                    t,
                });
            }
            sqrt_checked(n1.value(t)? * scale / dv, t)
        }),
        df: Box::new(move |t| {
            let (nv, dn) = n2.jet(t)?;
            let (dv, dd) = d2.jet(t)?;
            if dv == 0.0 {
                return Err(Error::Domain {
                    what: "rescaling denominator vanishes".into(),
                    t,
                });
            }
            let u = nv * scale / dv;
            let du = scale * (dn * dv - nv * dd) / (dv * dv);
            Ok(du / (2.0 * sqrt_checked(u, t)?))
        }),
    }
    .coeff()
}

fn sqrt_checked(u: f64, t: f64) -> Result<f64> {
    if u <= 0.0 || !u.is_finite() {
        return Err(Error::Domain {
            what: format!("square root of a non-positive value ({u})"),
            t,
        });
    }
    Ok(u.sqrt())
}

/// The curve `diag(√G, 1/√G)` realizing the rescaling `y' = G(t)·y`.
///
/// Symbolic scales give an analytic curve; procedural scales are tabulated
/// on the grid with exact knot tangents.  The scale must be positive on the
/// grid.
pub fn scaling_curve(g: &Coeff, domain: (f64, f64), grid: &Grid) -> Result<Sl2Curve> {
    if let Some(ge) = g.expr() {
        return Sl2Curve::analytic(
            ge.clone().pow(0.5),
            Expr::number(0.0),
            Expr::number(0.0),
            ge.clone().pow(-0.5),
            domain,
        );
    }
    let mut mats = Vec::with_capacity(grid.points().len());
    let mut tangents = Vec::with_capacity(grid.points().len());
    for &t in grid.points() {
        let (gv, dg) = g.jet(t)?;
        if gv <= 0.0 {
            return Err(Error::Domain {
                what: format!("rescaling requires a positive scale, got {gv}"),
                t,
            });
        }
        let s = gv.sqrt();
        mats.push([s, 0.0, 0.0, 1.0 / s]);
        tangents.push([dg / (2.0 * s), 0.0, 0.0, -dg / (2.0 * gv * s)]);
    }
    Ok(Sl2Curve::tabulated(HermiteCurve::new(
        grid.points().to_vec(),
        mats,
        Some(tangents),
    )?))
}

/// The family of equations reachable from the target
/// `dy/dt = D(t)(c0 + c1·y + c2·y²)` by positive rescalings, parametrized by
/// the drift coefficient `b0`:
///
/// `b0' = b0`, `b1' = ḃ₀/b₀ − Ḋ/D + c₁D`, `b2' = D²c₀c₂/b₀`.
///
/// With symbolic `d` and `b0` the output is symbolic.  Otherwise the
/// coefficients are procedural; their first derivatives fall back to a
/// central difference of the (exactly evaluated) value where a second
/// derivative of the inputs would be needed.
pub fn c2tu_family(
    d: &Coeff,
    c: [f64; 3],
    b0: &Coeff,
    domain: (f64, f64),
) -> Result<RiccatiEq> {
    let [c0, c1, c2] = c;
    if c0 * c2 == 0.0 {
        return Err(Error::Precondition(format!(
            "the reachable family needs c0*c2 nonzero, got ({c0}, {c1}, {c2})"
        )));
    }
    if let (Some(de), Some(b0e)) = (d.expr(), b0.expr()) {
        let b1p = b0e.derivative() / b0e.clone() - de.derivative() / de.clone()
            + Expr::number(c1) * de.clone();
        let b2p = de.clone() * de.clone() * Expr::number(c0 * c2) / b0e.clone();
        return RiccatiEq::new(b0e.clone(), b1p, b2p, domain);
    }

    let (d1, b01) = (d.clone(), b0.clone());
    let b1p = FnCoeff {
        name: "db0/b0 - dD/D + c1*D".into(),
        f: Box::new(move |t| {
            let (b0v, db0) = b01.jet(t)?;
            let (dv, dd) = d1.jet(t)?;
            if b0v == 0.0 || dv == 0.0 {
                return Err(Error::Domain {
                    what: "the reachable family needs b0 and D nonvanishing".into(),
                    t,
                });
            }
            Ok(db0 / b0v - dd / dv + c1 * dv)
        }),
        df: Box::new({
            let (d2, b02) = (d.clone(), b0.clone());
            move |t| {
                let value = |s: f64| -> Result<f64> {
                    let (b0v, db0) = b02.jet(s)?;
                    let (dv, dd) = d2.jet(s)?;
                    if b0v == 0.0 || dv == 0.0 {
                        return Err(Error::Domain {
                            what: "the reachable family needs b0 and D nonvanishing".into(),
                            t: s,
                        });
                    }
                    Ok(db0 / b0v - dd / dv + c1 * dv)
                };
                let h = 1e-5 * (1.0 + t.abs());
                Ok((value(t + h)? - value(t - h)?) / (2.0 * h))
            }
        }),
    }
    .coeff();

    let (d3, b03) = (d.clone(), b0.clone());
    let (d4, b04) = (d.clone(), b0.clone());
    let b2p = FnCoeff {
        name: "D^2*c0*c2/b0".into(),
        f: Box::new(move |t| {
            let dv = d3.value(t)?;
            let b0v = b03.value(t)?;
            if b0v == 0.0 {
                return Err(Error::Domain {
                    what: "the reachable family needs b0 nonvanishing".into(),
                    t,
                });
            }
            Ok(dv * dv * c0 * c2 / b0v)
        }),
        df: Box::new(move |t| {
            let (dv, dd) = d4.jet(t)?;
            let (b0v, db0) = b04.jet(t)?;
            if b0v == 0.0 {
                return Err(Error::Domain {
                    what: "the reachable family needs b0 nonvanishing".into(),
                    t,
                });
            }
            Ok(c0 * c2 * (2.0 * dv * dd * b0v - dv * dv * db0) / (b0v * b0v))
        }),
    }
    .coeff();

    RiccatiEq::new(b0.clone(), b1p, b2p, domain)
}

/// A detected constant particular solution with the linearizing data.
#[derive(Debug, Clone)]
pub struct LinearizationOutcome {
    /// The constant solution: `b₀ + b₁c + b₂c² ≡ 0` on the grid.
    pub c: f64,
    /// The kernel invariant `1/c` (infinite when `c = 0`).
    pub k_invariant: f64,
    /// A constant unimodular matrix sending `c` to infinity.
    pub curve: Sl2,
    /// The linear equation satisfied by the transformed variable.
    pub linear: LinearEq,
    /// Largest normalized residual of the root on the grid.
    pub residual: f64,
}

/// Searches for a real constant `c` solving the equation identically on the
/// grid; linearizes by sending it to infinity.
///
/// Candidate roots come from the pointwise quadratic at a few grid points
/// and are then residual-checked everywhere; among the survivors the one
/// with the smallest absolute value wins.  Returns `None` when no constant
/// root exists.
pub fn linearization_test(
    eq: &RiccatiEq,
    grid: &Grid,
) -> Result<Option<LinearizationOutcome>> {
    let v0 = sample_coeff(eq.b0(), grid)?;
    let v1 = sample_coeff(eq.b1(), grid)?;
    let v2 = sample_coeff(eq.b2(), grid)?;
    let n = grid.points().len();

    let mut candidates: Vec<f64> = Vec::new();
    for &i in &[0usize, n / 2, n - 1] {
        for root in point_roots(v0[i], v1[i], v2[i]) {
            if candidates
                .iter()
                .all(|c| (c - root).abs() > 1e-9 * (1.0 + root.abs()))
            {
                candidates.push(root);
            }
        }
    }

    let residual_of = |c: f64| -> f64 {
        let mut worst = 0.0f64;
        for i in 0..n {
            let r = v0[i] + v1[i] * c + v2[i] * c * c;
            let scale = 1.0 + v0[i].abs() + (v1[i] * c).abs() + (v2[i] * c * c).abs();
            worst = worst.max(r.abs() / scale);
        }
        worst
    };

    let mut best: Option<(f64, f64)> = None;
    for &c in &candidates {
        let res = residual_of(c);
        if res <= grid.tolerance() {
            let better = match best {
                None => true,
                Some((bc, _)) => c.abs() < bc.abs(),
            };
            if better {
                best = Some((c, res));
            }
        }
    }
    let Some((c, residual)) = best else {
        return Ok(None);
    };

    let curve = if c == 0.0 {
        Sl2::new(0.0, -1.0, 1.0, 0.0)?
    } else {
        Sl2::new(0.0, c, -1.0 / c, 1.0)?
    };
    let transformed = transform(eq, &Sl2Curve::constant(curve.clone()))?;
    let linear = LinearEq {
        a: transformed.b0().clone(),
        b: transformed.b1().clone(),
    };
    Ok(Some(LinearizationOutcome {
        c,
        k_invariant: 1.0 / c,
        curve,
        linear,
        residual,
    }))
}

/// Real roots of `b2·c² + b1·c + b0 = 0` at one point, largest-magnitude
/// coefficient guarded.
fn point_roots(b0: f64, b1: f64, b2: f64) -> Vec<f64> {
    let scale = b0.abs().max(b1.abs()).max(b2.abs());
    if scale == 0.0 {
        return Vec::new();
    }
    if b2.abs() <= 1e-14 * scale {
        if b1.abs() <= 1e-14 * scale {
            return Vec::new();
        }
        return vec![-b0 / b1];
    }
    let disc = b1 * b1 - 4.0 * b0 * b2;
    if disc < 0.0 {
        return Vec::new();
    }
    let sq = disc.sqrt();
    let q = -0.5 * (b1 + b1.signum() * sq);
    let mut roots = Vec::new();
    if q != 0.0 {
        roots.push(q / b2);
        roots.push(b0 / q);
    } else {
        // b1 = 0 and disc = -4*b0*b2 >= 0.
        let r = (-b0 / b2).max(0.0).sqrt();
        roots.push(r);
        roots.push(-r);
    }
    roots.retain(|r| r.is_finite());
    roots
}

/// The transport condition `d/dt(b₁/b₂) = −b₀` with its quadrature
/// closed-form scale.
#[derive(Clone)]
pub struct Ft2SpecialOutcome {
    /// The offset `M = b₁/b₂`.
    pub m: Coeff,
    /// The scale `D = E/(1 + c₁∫E)`, `E = exp(∫A)`, `A = −b₁ + ḃ₂/b₂`,
    /// anchored so `D = 1` at the grid's first point.
    pub d: Coeff,
    /// The drift constant `c₁` of the target `D·(c₁y' + y'²)`.
    pub c1: f64,
    /// Largest normalized residual of the condition on the grid.
    pub residual: f64,
}

impl std::fmt::Debug for Ft2SpecialOutcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Ft2SpecialOutcome")
            .field("m", &self.m.describe())
            .field("d", &self.d.describe())
            .field("c1", &self.c1)
            .field("residual", &self.residual)
            .finish()
    }
}

/// Checks `d/dt(b₁/b₂) = −b₀` on the grid; on success returns the offset
/// `M = b₁/b₂` and the quadrature-defined scale `D` solving
/// `Ḋ = A·D − c₁D²` with `D = 1` at the grid's first point.
///
/// Requires `b₂ ≠ 0` on the grid.  Returns `None` when the condition fails
/// by more than the grid tolerance.
pub fn ft2_special_m(
    eq: &RiccatiEq,
    c1: f64,
    grid: &Grid,
) -> Result<Option<Ft2SpecialOutcome>> {
    let j1 = sample_jets(eq.b1(), grid)?;
    let j2 = sample_jets(eq.b2(), grid)?;
    let v0 = sample_coeff(eq.b0(), grid)?;
    let mut residual = 0.0f64;
    for (((b1, db1), (b2, db2)), (b0, t)) in j1
        .iter()
        .zip(j2.iter())
        .zip(v0.iter().zip(grid.points().iter()))
    {
        if *b2 == 0.0 {
            return Err(Error::Domain {
                what: "the transport condition needs b2 nonvanishing".into(),
                t: *t,
            });
        }
        let lhs = (db1 * b2 - b1 * db2) / (b2 * b2);
        residual = residual.max((lhs + b0).abs() / (1.0 + b0.abs()));
    }
    if residual > grid.tolerance() {
        return Ok(None);
    }

    let m = eq.b1().ratio(eq.b2());
    let t0 = grid.points()[0];
    let b1c = eq.b1().clone();
    let b2c = eq.b2().clone();
    let a_fn = move |s: f64| -> Result<f64> {
        let b1v = b1c.value(s)?;
        let (b2v, db2) = b2c.jet(s)?;
        if b2v == 0.0 {
            return Err(Error::Domain {
                what: "the transport condition needs b2 nonvanishing".into(),
                t: s,
            });
        }
        Ok(-b1v + db2 / b2v)
    };
    let a_for_value = a_fn.clone();
    let a_for_deriv = a_fn.clone();
    let value = move |t: f64| -> Result<f64> {
        let mut a1 = a_for_value.clone();
        let ia = quad(&mut a1, t0, t, QUAD_RTOL, QUAD_ATOL)?.value;
        let e_here = ia.exp();
        let mut e_fn = |s: f64| -> Result<f64> {
            let mut a2 = a_for_value.clone();
            Ok(quad(&mut a2, t0, s, QUAD_RTOL, QUAD_ATOL)?.value.exp())
        };
        let ie = quad(&mut e_fn, t0, t, QUAD_RTOL, QUAD_ATOL)?.value;
        let den = 1.0 + c1 * ie;
        if den == 0.0 || !den.is_finite() {
            return Err(Error::Domain {
                what: format!("transport scale denominator 1 + c1*∫E = {den}"),
                t,
            });
        }
        let d = e_here / den;
        if !d.is_finite() {
            return Err(Error::NonFinite {
                what: "transport scale D".into(),
                t,
            });
        }
        Ok(d)
    };
    let value_for_deriv = value.clone();
    let d = FnCoeff {
        name: format!("exp(∫A)/(1 + {c1}*∫exp(∫A)) from t0 = {t0}"),
        f: Box::new(value),
        df: Box::new(move |t| {
            let dv = value_for_deriv(t)?;
            Ok(a_for_deriv(t)? * dv - c1 * dv * dv)
        }),
    }
    .coeff();

    Ok(Some(Ft2SpecialOutcome {
        m,
        d,
        c1,
        residual,
    }))
}
