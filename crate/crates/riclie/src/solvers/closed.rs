//! Quadrature-backed solvers for the two terminal equation shapes.
//!
//! Every reduction in the crate bottoms out in one of two solvable cases:
//!
//! * a first-order linear equation `dy/dt = a(t) + b(t)·y`, solved by the
//!   integrating-factor formula with nested adaptive quadrature;
//! * an equation with constant coefficient ratios, `dy/dt = d(t)·(c0 + c1·y
//!   + c2·y²)`, solved by reparametrising time through `τ = ∫ d` and applying
//!   the closed-form flow of the constant equation, which is a one-parameter
//!   family of linear-fractional maps.

use crate::algebra::{mobius_raw, ExtReal};
use crate::riccati::{Coeff, TargetForm};
use crate::rk::StepCtrl;
use crate::solvers::{oracle_integrate, quad, SolutionTrace};
use crate::{Error, Result};

use std::fmt;

/// A first-order linear equation `dy/dt = a(t) + b(t)·y`.
#[derive(Clone)]
pub struct LinearEq {
    /// Inhomogeneous term `a(t)`.
    pub a: Coeff,
    /// Multiplier `b(t)`.
    pub b: Coeff,
}

impl fmt::Debug for LinearEq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "LinearEq {{ a: {}, b: {} }}",
            self.a.describe(),
            self.b.describe()
        )
    }
}

/// Solves a linear equation from `(t0, y0)` at the given sample times.
///
/// Uses the integrating factor: with `B(t) = ∫_{t0}^t b`, the solution is
/// `y(t) = e^{B(t)} (y0 + ∫_{t0}^t e^{-B(s)} a(s) ds)`.  Both integrals are
/// accumulated segment by segment over the sample grid, with the inner
/// exponent resolved by a nested quadrature anchored at the segment start.
/// `samples` must be monotone away from `t0` (either direction).
pub fn solve_linear(
    eq: &LinearEq,
    t0: f64,
    y0: f64,
    samples: &[f64],
    rtol: f64,
) -> Result<SolutionTrace> {
    if samples.is_empty() {
        return Ok(SolutionTrace::from_values(Vec::new(), Vec::new()));
    }
    let dir = (samples[samples.len() - 1] - t0).signum();
    let mut prev = t0;
    for &s in samples {
        if (s - prev) * dir < 0.0 {
            return Err(Error::Invalid(
                "sample times must be monotone away from the initial time".into(),
            ));
        }
        prev = s;
    }

    let atol = 1e-300;
    let mut times = Vec::with_capacity(samples.len());
    let mut values = Vec::with_capacity(samples.len());

    let mut b_acc = 0.0f64; // B at the start of the current segment
    let mut i_acc = 0.0f64; // ∫ e^{-B} a up to the segment start
    let mut seg_lo = t0;
    for &s in samples {
        if s != seg_lo {
            let b_lo = b_acc;
            let mut inner = |x: f64| -> Result<f64> {
                let bx = b_lo + quad(&mut |u| eq.b.value(u), seg_lo, x, rtol, atol)?.value;
                Ok((-bx).exp() * eq.a.value(x)?)
            };
            i_acc += quad(&mut inner, seg_lo, s, rtol, atol)?.value;
            b_acc += quad(&mut |u| eq.b.value(u), seg_lo, s, rtol, atol)?.value;
            seg_lo = s;
        }
        let y = b_acc.exp() * (y0 + i_acc);
        if !y.is_finite() {
            return Err(Error::NonFinite {
                what: "linear-equation solution (integrating factor overflow)".into(),
                t: s,
            });
        }
        times.push(s);
        values.push(ExtReal::Finite(y));
    }
    Ok(SolutionTrace::from_values(times, values))
}

/// How an autonomous-profile solve was carried out.
#[derive(Debug, Clone)]
pub struct AutonomousOutcome {
    /// The sampled solution.
    pub trace: SolutionTrace,
    /// Short description of the branch taken.
    pub method: &'static str,
    /// Non-fatal observations, e.g. a near-degenerate discriminant.
    pub warnings: Vec<String>,
}

/// Solves `dy/dt = d(t)·(c0 + c1·y + c2·y²)` from `(t0, y0)`.
///
/// The rescaled time `τ(t) = ∫_{t0}^t d` reduces the problem to the constant
/// equation with coefficients `c`, whose flow is linear-fractional with
/// matrix `exp(τ·m)`, `m = [[c1/2, c0], [-c2, -c1/2]]`.  The exponential is
/// taken in closed form per the sign of the discriminant `Δ = c1² - 4·c0·c2`
/// (parabolic / hyperbolic / trigonometric); a discriminant too close to zero
/// to classify reliably falls back to the numerical oracle with a warning.
/// The initial value may be infinite.  `samples` must be monotone away from
/// `t0`.
pub fn solve_autonomous(
    form: &TargetForm,
    t0: f64,
    y0: ExtReal,
    samples: &[f64],
    rtol: f64,
) -> Result<AutonomousOutcome> {
    let [c0, c1, c2] = form.c;
    if !(c0.is_finite() && c1.is_finite() && c2.is_finite()) {
        return Err(Error::Invalid("target coefficients must be finite".into()));
    }
    if samples.is_empty() {
        return Ok(AutonomousOutcome {
            trace: SolutionTrace::from_values(Vec::new(), Vec::new()),
            method: "exp-map (empty grid)",
            warnings: Vec::new(),
        });
    }
    let dir = (samples[samples.len() - 1] - t0).signum();
    let mut prev = t0;
    for &s in samples {
        if (s - prev) * dir < 0.0 {
            return Err(Error::Invalid(
                "sample times must be monotone away from the initial time".into(),
            ));
        }
        prev = s;
    }

    let delta = c1 * c1 - 4.0 * c0 * c2;
    let delta_tol = 1e-12 * (c1 * c1 + (4.0 * c0 * c2).abs());
    let mut warnings = Vec::new();

    if delta != 0.0 && delta.abs() <= delta_tol {
        // The discriminant sign is numerically unresolvable; the closed-form
        // branches would be evaluated in a regime where they lose accuracy.
        warnings.push(format!(
            "discriminant {delta:e} is within rounding of zero; using the numerical oracle"
        ));
        let t_end = samples[samples.len() - 1];
        if t_end == t0 {
            let values = vec![y0; samples.len()];
            return Ok(AutonomousOutcome {
                trace: SolutionTrace::from_values(samples.to_vec(), values),
                method: "exp-map (degenerate span)",
                warnings,
            });
        }
        let lo = t0.min(t_end);
        let hi = t0.max(t_end);
        let eq = form.to_equation((lo, hi))?;
        let ctrl = StepCtrl {
            rtol: (rtol * 1e-3).max(1e-13),
            ..StepCtrl::default()
        };
        let trace = oracle_integrate(&eq, (t0, samples[samples.len() - 1]), y0, samples, &ctrl)?;
        return Ok(AutonomousOutcome {
            trace,
            method: "oracle fallback (near-degenerate discriminant)",
            warnings,
        });
    }

    // m = [[c1/2, c0], [-c2, -c1/2]]; m² = (Δ/4)·I, so exp(τm) has the
    // closed forms below with ω = √|Δ|/2.
    let m = [c1 / 2.0, c0, -c2, -c1 / 2.0];
    let omega = (delta.abs()).sqrt() / 2.0;
    let (flow, method): (Box<dyn Fn(f64) -> [f64; 4]>, &'static str) = if delta == 0.0 {
        (
            Box::new(move |tau: f64| {
                [
                    1.0 + tau * m[0],
                    tau * m[1],
                    tau * m[2],
                    1.0 + tau * m[3],
                ]
            }),
            "exp-map (parabolic)",
        )
    } else if delta > 0.0 {
        // exp(τm) = cosh(ωτ)·I + sinh(ωτ)/ω·m; dividing by cosh keeps the
        // entries bounded (the map is scale-invariant) for large |ωτ|.
        (
            Box::new(move |tau: f64| {
                let th = (omega * tau).tanh();
                let k = th / omega;
                [1.0 + k * m[0], k * m[1], k * m[2], 1.0 + k * m[3]]
            }),
            "exp-map (hyperbolic)",
        )
    } else {
        (
            Box::new(move |tau: f64| {
                let (s, c) = (omega * tau).sin_cos();
                let k = s / omega;
                [c + k * m[0], k * m[1], k * m[2], c + k * m[3]]
            }),
            "exp-map (trigonometric)",
        )
    };

    let atol = 1e-300;
    let mut times = Vec::with_capacity(samples.len());
    let mut values = Vec::with_capacity(samples.len());
    let mut tau = 0.0f64;
    let mut seg_lo = t0;
    for &s in samples {
        if s != seg_lo {
            tau += quad(&mut |u| form.d.value(u), seg_lo, s, rtol, atol)?.value;
            seg_lo = s;
        }
        times.push(s);
        values.push(mobius_raw(&flow(tau), y0));
    }
    Ok(AutonomousOutcome {
        trace: SolutionTrace::from_values(times, values),
        method,
        warnings,
    })
}
