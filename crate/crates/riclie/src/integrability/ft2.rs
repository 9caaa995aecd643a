//! The two-function transport system that carries a Riccati equation onto a
//! separable target through the affine change `y' = b₂/(D·c₂)·(y + M)`.

use super::HermiteCoeff;
use crate::algebra::ExtReal;
use crate::riccati::{RiccatiEq, TargetForm};
use crate::rk::{integrate, OnAccept, StepCtrl, StepMode};
use crate::solvers::{SolutionTrace, TraceStats};
use crate::{Error, Result};

/// An integrated `(D, M)` pair sampled on a time grid, together with the
/// target constants it aims at.
#[derive(Debug, Clone)]
pub struct Ft2Path {
    /// Sample times, ordered along the direction of integration.
    pub times: Vec<f64>,
    /// The scale `D` at each sample.
    pub d: Vec<f64>,
    /// The offset `M` at each sample.
    pub m: Vec<f64>,
    /// Exact time derivatives of `D` at the samples.
    pub d_dot: Vec<f64>,
    /// Exact time derivatives of `M` at the samples.
    pub m_dot: Vec<f64>,
    /// Target constants `(c0, c1, c2)`.
    pub c: [f64; 3],
    /// Integration diagnostics.
    pub stats: TraceStats,
}

/// Integrates the transport system
///
/// ```text
/// Ḋ = (b₁ + ḃ₂/b₂)·D − c₁·D² − 2·b₂·M·D
/// Ṁ = −b₀ + (c₀c₂/b₂)·D² + b₁·M − b₂·M²
/// ```
///
/// from `(D, M)(span.0) = (d0, m0)`.  A solution defines the change
/// `y' = b₂/(D·c₂)·(y + M)` carrying the equation onto
/// `dy'/dt = D(t)(c₀ + c₁y' + c₂y'²)`.  Requires `b₂ ≠ 0` on the span,
/// `c₂ ≠ 0`, and `d0 ≠ 0`; the integration fails with a zero-crossing error
/// if `D` reaches zero (the change of variables degenerates there).
pub fn ft2_system(
    eq: &RiccatiEq,
    c: [f64; 3],
    d0: f64,
    m0: f64,
    span: (f64, f64),
    samples: &[f64],
    ctrl: &StepCtrl,
) -> Result<Ft2Path> {
    eq.check_span(span)?;
    let [c0, c1, c2] = c;
    if !(c0.is_finite() && c1.is_finite() && c2.is_finite()) || c2 == 0.0 {
        return Err(Error::Precondition(format!(
            "target constants must be finite with c2 nonzero, got ({c0}, {c1}, {c2})"
        )));
    }
    if d0 == 0.0 || !d0.is_finite() || !m0.is_finite() {
        return Err(Error::Precondition(format!(
            "initial transport state needs finite (d0, m0) with d0 nonzero, got ({d0}, {m0})"
        )));
    }

    let rhs_at = |t: f64, x: &[f64; 2]| -> Result<[f64; 2]> {
        let b0 = eq.b0().value(t)?;
        let b1 = eq.b1().value(t)?;
        let (b2, db2) = eq.b2().jet(t)?;
        if b2 == 0.0 {
            return Err(Error::Domain {
                what: "the transport system needs b2 nonvanishing".into(),
                t,
            });
        }
        let (d, m) = (x[0], x[1]);
        Ok([
            (b1 + db2 / b2) * d - c1 * d * d - 2.0 * b2 * m * d,
            -b0 + (c0 * c2 / b2) * d * d + b1 * m - b2 * m * m,
        ])
    };

    let mut times = Vec::with_capacity(samples.len());
    let mut dvals = Vec::with_capacity(samples.len());
    let mut mvals = Vec::with_capacity(samples.len());
    let stats = {
        let mut rhs = |t: f64, x: &[f64; 2]| rhs_at(t, x);
        let mut on_sample = |t: f64, x: &[f64; 2]| -> Result<()> {
            times.push(t);
            dvals.push(x[0]);
            mvals.push(x[1]);
            Ok(())
        };
        let mut on_accept = |rec: &crate::rk::StepRecord<'_, 2>| -> Result<OnAccept<2>> {
            if rec.y1[0] == 0.0 || rec.y1[0].signum() != d0.signum() {
                return Err(Error::ZeroCrossing {
                    what: "transport scale D".into(),
                    t: rec.t0 + rec.h,
                });
            }
            Ok(OnAccept::Continue)
        };
        integrate(
            &mut rhs,
            span,
            [d0, m0],
            ctrl,
            StepMode::Adaptive,
            samples,
            &mut on_sample,
            &mut on_accept,
        )?
    };

    let mut d_dot = Vec::with_capacity(times.len());
    let mut m_dot = Vec::with_capacity(times.len());
    for ((t, d), m) in times.iter().zip(dvals.iter()).zip(mvals.iter()) {
        let der = rhs_at(*t, &[*d, *m])?;
        d_dot.push(der[0]);
        m_dot.push(der[1]);
    }

    Ok(Ft2Path {
        times,
        d: dvals,
        m: mvals,
        d_dot,
        m_dot,
        c,
        stats: TraceStats {
            accepted_steps: stats.n_accepted,
            rejected_steps: stats.n_rejected,
            rhs_evals: stats.n_rhs,
            max_defect: stats.max_defect,
            chart_switches: 0,
        },
    })
}

impl Ft2Path {
    /// The scale `D` as an interpolating coefficient with exact knot slopes.
    pub fn d_coeff(&self) -> Result<crate::riccati::Coeff> {
        Ok(HermiteCoeff::new(
            "transport scale D".into(),
            self.times.clone(),
            self.d.clone(),
            self.d_dot.clone(),
        )?
        .coeff())
    }

    /// The offset `M` as an interpolating coefficient with exact knot slopes.
    pub fn m_coeff(&self) -> Result<crate::riccati::Coeff> {
        Ok(HermiteCoeff::new(
            "transport offset M".into(),
            self.times.clone(),
            self.m.clone(),
            self.m_dot.clone(),
        )?
        .coeff())
    }

    /// The separable target `dy'/dt = D(t)(c0 + c1·y' + c2·y'²)`.
    pub fn target_form(&self) -> Result<TargetForm> {
        Ok(TargetForm {
            d: self.d_coeff()?,
            c: self.c,
        })
    }

    /// Pushes a solution of the source equation through the change
    /// `y' = b₂/(D·c₂)·(y + M)` pointwise at the path's sample times.
    pub fn push(&self, eq: &RiccatiEq, trace: &SolutionTrace) -> Result<SolutionTrace> {
        self.convert(eq, trace, true)
    }

    /// Pulls a solution of the target back: `y = (D·c₂/b₂)·y' − M`.
    pub fn pull(&self, eq: &RiccatiEq, trace: &SolutionTrace) -> Result<SolutionTrace> {
        self.convert(eq, trace, false)
    }

    fn convert(
        &self,
        eq: &RiccatiEq,
        trace: &SolutionTrace,
        forward: bool,
    ) -> Result<SolutionTrace> {
        if trace.times.len() != self.times.len()
            || trace
                .times
                .iter()
                .zip(self.times.iter())
                .any(|(a, b)| (a - b).abs() > 1e-12 * (1.0 + a.abs()))
        {
            return Err(Error::MismatchedTraces(
                "trace sample times differ from the transport path's".into(),
            ));
        }
        let c2 = self.c[2];
        let mut values = Vec::with_capacity(trace.values.len());
        for ((t, v), (d, m)) in trace
            .times
            .iter()
            .zip(trace.values.iter())
            .zip(self.d.iter().zip(self.m.iter()))
        {
            let b2 = eq.b2().value(*t)?;
            if b2 == 0.0 {
                return Err(Error::Domain {
                    what: "the transport change needs b2 nonvanishing".into(),
                    t: *t,
                });
            }
            let mapped = match v {
                ExtReal::Infinity => ExtReal::Infinity,
                ExtReal::Finite(y) => {
                    let w = if forward {
                        b2 / (d * c2) * (y + m)
                    } else {
                        (d * c2 / b2) * y - m
                    };
                    if !w.is_finite() {
                        return Err(Error::NonFinite {
                            what: "transport-changed value".into(),
                            t: *t,
                        });
                    }
                    ExtReal::Finite(w)
                }
            };
            values.push(mapped);
        }
        let mut out = SolutionTrace::from_values(trace.times.clone(), values);
        out.stats = trace.stats;
        Ok(out)
    }
}
