//! Time-dependent curves in SL(2,ℝ).
//!
//! Three representations share one interface: constant matrices, analytic
//! entries (four expressions of time), and tabulated matrices interpolated by
//! cubic Hermite polynomials entry-wise. Tabulated evaluation renormalizes the
//! interpolated matrix by 1/√det, so the curve stays exactly unimodular between
//! knots; derivatives are taken through the renormalization.

use std::sync::Arc;

use super::Sl2;
use crate::expr::{AdScalar, Dual, EvalMeta, Expr};
use crate::{Error, Result};

/// Determinant tolerance for analytic curve entries on evaluation grids.
pub const ANALYTIC_DET_TOL: f64 = 1e-8;

/// Four expression entries of an analytic curve, rows (alpha beta; gamma delta).
#[derive(Debug, Clone)]
pub struct AnalyticEntries {
    pub alpha: Expr,
    pub beta: Expr,
    pub gamma: Expr,
    pub delta: Expr,
}

/// Cubic-Hermite-interpolated tabulated curve.
#[derive(Debug, Clone)]
pub struct HermiteCurve {
    ts: Vec<f64>,
    mats: Vec<[f64; 4]>,
    tangents: Vec<[f64; 4]>,
}

impl HermiteCurve {
    /// Knot matrices must have determinant within 1e-6 of 1; they are snapped
    /// exactly onto SL(2,ℝ) at construction. When `tangents` is `None`,
    /// centered finite differences of the knots are used (one-sided at the
    /// ends).
    pub fn new(ts: Vec<f64>, mats: Vec<[f64; 4]>, tangents: Option<Vec<[f64; 4]>>) -> Result<Self> {
        if ts.len() < 2 || ts.len() != mats.len() {
            return Err(Error::Invalid(format!(
                "tabulated curve needs n ≥ 2 knots with matching times, got {} times / {} matrices",
                ts.len(),
                mats.len()
            )));
        }
        if let Some(tg) = &tangents {
            if tg.len() != ts.len() {
                return Err(Error::Invalid("tangent count must match knot count".into()));
            }
        }
        if !ts.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Invalid("knot times must be strictly increasing".into()));
        }
        let mut snapped = Vec::with_capacity(mats.len());
        for m in &mats {
            let det = m[0] * m[3] - m[1] * m[2];
            if !det.is_finite() || (det - 1.0).abs() > 1e-6 {
                return Err(Error::NotUnimodular { det });
            }
            let s = det.sqrt();
            snapped.push([m[0] / s, m[1] / s, m[2] / s, m[3] / s]);
        }
        let tangents = tangents.unwrap_or_else(|| finite_difference_tangents(&ts, &snapped));
        Ok(HermiteCurve { ts, mats: snapped, tangents })
    }

    pub fn span(&self) -> (f64, f64) {
        (self.ts[0], *self.ts.last().unwrap())
    }

    pub fn knot_times(&self) -> &[f64] {
        &self.ts
    }

    /// Interpolated, renormalized entries at a generic scalar.
    pub(crate) fn entries<S: AdScalar>(&self, t: S) -> Result<[S; 4]> {
        let tv = t.value();
        let (lo, hi) = self.span();
        let slack = 1e-9 * (hi - lo);
        if tv < lo - slack || tv > hi + slack {
            return Err(Error::Precondition(format!(
                "tabulated curve evaluated at t = {tv} outside its knot span [{lo}, {hi}]"
            )));
        }
        // Segment index: the last knot time ≤ t (clamped to a valid segment).
        let i = match self.ts.partition_point(|&k| k <= tv) {
            0 => 0,
            p => (p - 1).min(self.ts.len() - 2),
        };
        let h = self.ts[i + 1] - self.ts[i];
        let u = (t - S::from_f64(self.ts[i])) / S::from_f64(h);
        let one = S::one();
        let d = one - u;
        let h00 = (one + u + u) * d * d;
        let h10 = u * d * d;
        let h01 = u * u * (S::from_f64(3.0) - u - u);
        let h11 = u * u * (u - one);
        let mut e = [S::zero(); 4];
        for k in 0..4 {
            e[k] = h00 * S::from_f64(self.mats[i][k])
                + h10 * S::from_f64(h * self.tangents[i][k])
                + h01 * S::from_f64(self.mats[i + 1][k])
                + h11 * S::from_f64(h * self.tangents[i + 1][k]);
        }
        renormalize(e, tv)
    }
}

fn finite_difference_tangents(ts: &[f64], mats: &[[f64; 4]]) -> Vec<[f64; 4]> {
    let n = ts.len();
    let mut out = vec![[0.0; 4]; n];
    for i in 0..n {
        let (a, b) = if i == 0 {
            (0, 1)
        } else if i == n - 1 {
            (n - 2, n - 1)
        } else {
            (i - 1, i + 1)
        };
        let dt = ts[b] - ts[a];
        for k in 0..4 {
            out[i][k] = (mats[b][k] - mats[a][k]) / dt;
        }
    }
    out
}

/// Divide entries by √det in the given scalar arithmetic, so derivative
/// components pick up the renormalization chain rule.
fn renormalize<S: AdScalar>(e: [S; 4], t: f64) -> Result<[S; 4]> {
    let det = e[0] * e[3] - e[1] * e[2];
    if !(det.value() > 0.0) {
        return Err(Error::Numerical(format!(
            "curve leaves SL(2,ℝ) at t = {t}: interpolated det = {}",
            det.value()
        )));
    }
    let s = det.sqrt();
    Ok([e[0] / s, e[1] / s, e[2] / s, e[3] / s])
}

/// A time-dependent curve in SL(2,ℝ).
#[derive(Debug, Clone)]
pub enum Sl2Curve {
    Constant(Sl2),
    Analytic(Arc<AnalyticEntries>),
    Tabulated(Arc<HermiteCurve>),
}

impl Sl2Curve {
    pub fn constant(m: Sl2) -> Sl2Curve {
        Sl2Curve::Constant(m)
    }

    /// An analytic curve; the determinant is checked to be 1 within
    /// [`ANALYTIC_DET_TOL`] on a 64-point grid spanning `check_domain`.
    pub fn analytic(
        alpha: Expr,
        beta: Expr,
        gamma: Expr,
        delta: Expr,
        check_domain: (f64, f64),
    ) -> Result<Sl2Curve> {
        let (lo, hi) = check_domain;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::Invalid(format!("bad curve check domain [{lo}, {hi}]")));
        }
        let entries = AnalyticEntries { alpha, beta, gamma, delta };
        let curve = Sl2Curve::Analytic(Arc::new(entries));
        for k in 0..64 {
            let t = lo + (hi - lo) * k as f64 / 63.0;
            curve.eval(t)?;
        }
        Ok(curve)
    }

    pub fn tabulated(h: HermiteCurve) -> Sl2Curve {
        Sl2Curve::Tabulated(Arc::new(h))
    }

    /// Knot span for tabulated curves; `None` for the other kinds.
    pub fn time_span(&self) -> Option<(f64, f64)> {
        match self {
            Sl2Curve::Tabulated(h) => Some(h.span()),
            _ => None,
        }
    }

    /// Entries at a generic scalar (derivatives flow through dual arguments).
    pub(crate) fn entries_scalar<S: AdScalar>(&self, t: S) -> Result<[S; 4]> {
        match self {
            Sl2Curve::Constant(m) => Ok([
                S::from_f64(m.alpha),
                S::from_f64(m.beta),
                S::from_f64(m.gamma),
                S::from_f64(m.delta),
            ]),
            Sl2Curve::Analytic(e) => {
                let mut meta = EvalMeta::default();
                let raw = [
                    e.alpha.eval_scalar(t, &mut meta)?,
                    e.beta.eval_scalar(t, &mut meta)?,
                    e.gamma.eval_scalar(t, &mut meta)?,
                    e.delta.eval_scalar(t, &mut meta)?,
                ];
                let det = raw[0] * raw[3] - raw[1] * raw[2];
                if (det.value() - 1.0).abs() > ANALYTIC_DET_TOL {
                    return Err(Error::NotUnimodular { det: det.value() });
                }
                renormalize(raw, t.value())
            }
            Sl2Curve::Tabulated(h) => h.entries(t),
        }
    }

    /// The matrix at time `t`, exactly unimodular.
    pub fn eval(&self, t: f64) -> Result<Sl2> {
        let e = self.entries_scalar(t)?;
        Sl2::renormalized(e[0], e[1], e[2], e[3])
    }

    /// Entries and their first time derivatives at `t`.
    pub fn eval_jet(&self, t: f64) -> Result<([f64; 4], [f64; 4])> {
        let e = self.entries_scalar(Dual::seeded(t))?;
        Ok((e.map(|d| d.re), e.map(|d| d.eps)))
    }

    /// Entries and their first and second time derivatives at `t`.
    pub fn eval_jet2(&self, t: f64) -> Result<([f64; 4], [f64; 4], [f64; 4])> {
        let e = self.entries_scalar(Dual::seeded(Dual::seeded(t)))?;
        Ok((e.map(|d| d.re.re), e.map(|d| d.re.eps), e.map(|d| d.eps.eps)))
    }

    /// Expression entries, when the curve has a symbolic form.
    pub fn entry_exprs(&self) -> Option<[Expr; 4]> {
        match self {
            Sl2Curve::Constant(m) => Some([
                Expr::number(m.alpha),
                Expr::number(m.beta),
                Expr::number(m.gamma),
                Expr::number(m.delta),
            ]),
            Sl2Curve::Analytic(e) => {
                Some([e.alpha.clone(), e.beta.clone(), e.gamma.clone(), e.delta.clone()])
            }
            Sl2Curve::Tabulated(_) => None,
        }
    }

    /// The pointwise inverse curve t ↦ A(t)⁻¹.
    pub fn inverse(&self) -> Sl2Curve {
        match self {
            Sl2Curve::Constant(m) => Sl2Curve::Constant(m.inverse()),
            Sl2Curve::Analytic(e) => Sl2Curve::Analytic(Arc::new(AnalyticEntries {
                alpha: e.delta.clone(),
                beta: -e.beta.clone(),
                gamma: -e.gamma.clone(),
                delta: e.alpha.clone(),
            })),
            Sl2Curve::Tabulated(h) => {
                // Invert knots; tangents via d/dt A⁻¹ = −A⁻¹ Ȧ A⁻¹.
                let inv_mats: Vec<[f64; 4]> =
                    h.mats.iter().map(|m| [m[3], -m[1], -m[2], m[0]]).collect();
                let tangents: Vec<[f64; 4]> = h
                    .mats
                    .iter()
                    .zip(&h.tangents)
                    .map(|(m, dm)| {
                        let inv = [m[3], -m[1], -m[2], m[0]];
                        let p = super::mat_mul(&inv, dm);
                        let q = super::mat_mul(&p, &inv);
                        [-q[0], -q[1], -q[2], -q[3]]
                    })
                    .collect();
                Sl2Curve::Tabulated(Arc::new(HermiteCurve {
                    ts: h.ts.clone(),
                    mats: inv_mats,
                    tangents,
                }))
            }
        }
    }
}
