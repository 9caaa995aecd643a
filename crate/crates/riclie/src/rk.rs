//! Embedded Runge–Kutta 5(4) stepping for small fixed-size systems.
//!
//! A Dormand–Prince pair with FSAL reuse drives every numerical integration
//! in the crate: scalar oracles (with chart switching through the accept
//! callback), 2×2 fundamental systems, and connection systems.  The driver is
//! generic over the state dimension `N`, lands exactly on requested sample
//! times, and keeps a running interpolation-defect statistic so callers can
//! assert that accepted steps actually satisfy the equation between mesh
//! points.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Step-size and budget controls for adaptive integration.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct StepCtrl {
    /// Relative tolerance on the local error per step.
    pub rtol: f64,
    /// Absolute tolerance on the local error per step.
    pub atol: f64,
    /// Magnitude of the first trial step.
    pub h0: f64,
    /// Optional cap on the step magnitude.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hmax: Option<f64>,
    /// Upper bound on attempted steps (accepted plus rejected).
    pub max_steps: usize,
}

impl Default for StepCtrl {
    fn default() -> Self {
        StepCtrl {
            rtol: 1e-9,
            atol: 1e-12,
            h0: 1e-3,
            hmax: None,
            max_steps: 1_000_000,
        }
    }
}

impl StepCtrl {
    /// Validates tolerances and budget.
    pub fn validate(&self) -> Result<()> {
        if !(self.rtol.is_finite() && self.rtol > 0.0) || !(self.atol.is_finite() && self.atol >= 0.0)
        {
            return Err(Error::Invalid(format!(
                "step tolerances must be positive and finite, got rtol={}, atol={}",
                self.rtol, self.atol
            )));
        }
        if !(self.h0.is_finite() && self.h0 > 0.0) {
            return Err(Error::Invalid(format!(
                "initial step must be positive and finite, got {}",
                self.h0
            )));
        }
        if let Some(h) = self.hmax {
            if !(h.is_finite() && h > 0.0) {
                return Err(Error::Invalid(format!(
                    "step cap must be positive and finite, got {h}"
                )));
            }
        }
        if self.max_steps == 0 {
            return Err(Error::Invalid("step budget must be nonzero".into()));
        }
        Ok(())
    }
}

/// How the driver chooses step sizes.
#[derive(Debug, Clone, Copy)]
pub(crate) enum StepMode {
    /// Embedded error control with the tolerances in [`StepCtrl`].
    Adaptive,
    /// Constant step magnitude (still clamped to land on events).
    #[cfg_attr(not(test), allow(dead_code))]
    Fixed(f64),
}

/// Counters reported after a run.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct RunStats {
    /// Steps whose error estimate passed.
    pub n_accepted: usize,
    /// Steps retried with a smaller size.
    pub n_rejected: usize,
    /// Right-hand-side evaluations.
    pub n_rhs: usize,
    /// Largest normalized interpolation defect over accepted steps.
    pub max_defect: f64,
}

/// An accepted step, handed to the accept callback.
pub(crate) struct StepRecord<'a, const N: usize> {
    /// Left endpoint of the step.
    pub t0: f64,
    /// Signed step actually taken.
    pub h: f64,
    /// State at the left endpoint.
    #[cfg_attr(not(test), allow(dead_code))]
    pub y0: &'a [f64; N],
    /// State at the right endpoint.
    pub y1: &'a [f64; N],
}

/// Reply from the accept callback.
pub(crate) enum OnAccept<const N: usize> {
    /// Keep the accepted state and continue.
    Continue,
    /// Substitute a new state at the right endpoint before continuing.
    Replace([f64; N]),
}

const C: [f64; 5] = [1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0];
const A2: [f64; 1] = [1.0 / 5.0];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [
    19372.0 / 6561.0,
    -25360.0 / 2187.0,
    64448.0 / 6561.0,
    -212.0 / 729.0,
];
const A6: [f64; 5] = [
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

fn combine<const N: usize>(y0: &[f64; N], h: f64, ks: &[&[f64; N]], ws: &[f64]) -> [f64; N] {
    let mut out = *y0;
    for (k, &w) in ks.iter().zip(ws.iter()) {
        for i in 0..N {
            out[i] += h * w * k[i];
        }
    }
    out
}

fn all_finite<const N: usize>(y: &[f64; N]) -> bool {
    y.iter().all(|v| v.is_finite())
}

/// Outcome of a single trial step.
enum Trial<const N: usize> {
    /// Stages evaluated; carries `(y1, k7, err_norm)`.
    Done([f64; N], [f64; N], f64),
    /// A stage failed (error or non-finite value); carries the cause.
    Soft(Option<Error>),
}

/// Integrates `dy/dt = f(t, y)` from `span.0` to `span.1`.
///
/// `samples` must be sorted in the direction of integration and lie within
/// the span; the driver clamps steps so every sample time is hit exactly,
/// calling `on_sample` there (including at the initial time when listed).
/// After every accepted step `on_accept` may replace the state, which
/// invalidates the FSAL cache but is otherwise seamless — this is how chart
/// switches re-express the state mid-run.
pub(crate) fn integrate<const N: usize>(
    f: &mut dyn FnMut(f64, &[f64; N]) -> Result<[f64; N]>,
    span: (f64, f64),
    y0: [f64; N],
    ctrl: &StepCtrl,
    mode: StepMode,
    samples: &[f64],
    on_sample: &mut dyn FnMut(f64, &[f64; N]) -> Result<()>,
    on_accept: &mut dyn FnMut(&StepRecord<'_, N>) -> Result<OnAccept<N>>,
) -> Result<RunStats> {
    ctrl.validate()?;
    let (ta, tb) = span;
    if !(ta.is_finite() && tb.is_finite()) || ta == tb {
        return Err(Error::Invalid(format!(
            "integration span must be a nondegenerate finite interval, got [{ta}, {tb}]"
        )));
    }
    let dir = (tb - ta).signum();
    let total = (tb - ta).abs();
    for w in samples.windows(2) {
        if (w[1] - w[0]) * dir < 0.0 {
            return Err(Error::Invalid(
                "sample times must be sorted in the direction of integration".into(),
            ));
        }
    }
    if let (Some(&first), Some(&last)) = (samples.first(), samples.last()) {
        let slack = 1e-9 * total.max(1.0);
        if (first - ta) * dir < -slack || (tb - last) * dir < -slack {
            return Err(Error::Invalid(
                "sample times must lie within the integration span".into(),
            ));
        }
    }

    let mut stats = RunStats::default();
    let mut t = ta;
    let mut y = y0;
    let mut sample_idx = 0;

    // Emit any samples scheduled at the start.
    while sample_idx < samples.len() && samples[sample_idx] == t {
        on_sample(t, &y)?;
        sample_idx += 1;
    }

    let mut f0 = match f(t, &y) {
        Ok(v) if all_finite(&v) => v,
        Ok(_) => {
            return Err(Error::NonFinite {
                what: "right-hand side at the initial time".into(),
                t,
            })
        }
        Err(e) => return Err(e),
    };
    stats.n_rhs += 1;

    let h_cap = ctrl.hmax.unwrap_or(f64::INFINITY).min(total);
    let mut h_mag = match mode {
        StepMode::Adaptive => ctrl.h0.min(h_cap),
        StepMode::Fixed(h) => {
            if !(h.is_finite() && h > 0.0) {
                return Err(Error::Invalid(format!(
                    "fixed step must be positive and finite, got {h}"
                )));
            }
            h.min(total)
        }
    };
    let mut attempts = 0usize;
    let mut last_soft: Option<Error> = None;

    while t != tb {
        // Clamp toward the next event: pending sample first, then the end.
        let target = if sample_idx < samples.len() {
            samples[sample_idx]
        } else {
            tb
        };
        let dist = (target - t).abs();
        let (h_try, clamped) = if h_mag >= dist {
            (dist, true)
        } else {
            (h_mag, false)
        };

        if !clamped {
            let floor = 16.0 * f64::EPSILON * t.abs().max(total);
            if h_try <= floor {
                let detail = match last_soft.take() {
                    Some(e) => format!("right-hand side kept failing: {e}"),
                    None => "error control demanded a step below machine precision".into(),
                };
                return Err(Error::StepUnderflow { t, detail });
            }
        }

        attempts += 1;
        if attempts > ctrl.max_steps {
            return Err(Error::StepBudget {
                t,
                max_steps: ctrl.max_steps,
            });
        }

        let h = dir * h_try;
        let trial = try_step(f, t, &y, &f0, h, ctrl, &mut stats)?;
        let (y1, k7, err) = match trial {
            Trial::Soft(cause) => {
                if let Some(c) = cause {
                    last_soft = Some(c);
                }
                stats.n_rejected += 1;
                h_mag = h_try * 0.5;
                continue;
            }
            Trial::Done(y1, k7, err) => (y1, k7, err),
        };

        let accept = match mode {
            StepMode::Adaptive => err <= 1.0,
            StepMode::Fixed(_) => true,
        };
        if !accept {
            stats.n_rejected += 1;
            let fac = (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
            h_mag = h_try * fac;
            continue;
        }

        last_soft = None;
        stats.n_accepted += 1;

        // Interpolation defect at the step midpoint: compare the cubic
        // Hermite slope against the field at the interpolated midpoint.
        let tm = t + 0.5 * h;
        let mut ym = [0.0; N];
        let mut slope = [0.0; N];
        for i in 0..N {
            ym[i] = 0.5 * (y[i] + y1[i]) + 0.125 * h * (f0[i] - k7[i]);
            slope[i] = 1.5 * (y1[i] - y[i]) / h - 0.25 * (f0[i] + k7[i]);
        }
        if let Ok(fm) = f(tm, &ym) {
            stats.n_rhs += 1;
            if all_finite(&fm) {
                for i in 0..N {
                    let sc = ctrl.atol + ctrl.rtol * y[i].abs().max(y1[i].abs());
                    let d = (slope[i] - fm[i]).abs() * h.abs() / sc;
                    if d > stats.max_defect {
                        stats.max_defect = d;
                    }
                }
            }
        }

        let t1 = if clamped { target } else { t + h };
        let rec = StepRecord {
            t0: t,
            h,
            y0: &y,
            y1: &y1,
        };
        let mut fsal = Some(k7);
        let y_next = match on_accept(&rec)? {
            OnAccept::Continue => y1,
            OnAccept::Replace(ynew) => {
                fsal = None;
                ynew
            }
        };

        t = t1;
        y = y_next;
        f0 = match fsal {
            Some(k) => k,
            None => {
                let v = f(t, &y)?;
                stats.n_rhs += 1;
                if !all_finite(&v) {
                    return Err(Error::NonFinite {
                        what: "right-hand side after state replacement".into(),
                        t,
                    });
                }
                v
            }
        };

        while sample_idx < samples.len() && samples[sample_idx] == t {
            on_sample(t, &y)?;
            sample_idx += 1;
        }

        if let StepMode::Adaptive = mode {
            let fac = if err > 0.0 {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            } else {
                5.0
            };
            let proposed = (h_try * fac).min(h_cap);
            // A step shortened only to land on an event says nothing about
            // the controller's preferred size, so never shrink below it.
            h_mag = if clamped { h_mag.max(proposed) } else { proposed };
        }
    }

    if sample_idx < samples.len() {
        // Remaining samples can only be the terminal time repeated within
        // slack; emit them at the final state.
        while sample_idx < samples.len() {
            on_sample(tb, &y)?;
            sample_idx += 1;
        }
    }

    Ok(stats)
}

fn try_step<const N: usize>(
    f: &mut dyn FnMut(f64, &[f64; N]) -> Result<[f64; N]>,
    t: f64,
    y: &[f64; N],
    k1: &[f64; N],
    h: f64,
    ctrl: &StepCtrl,
    stats: &mut RunStats,
) -> Result<Trial<N>> {
    let mut eval = |tt: f64, yy: &[f64; N], stats: &mut RunStats| -> std::result::Result<[f64; N], Option<Error>> {
        stats.n_rhs += 1;
        match f(tt, yy) {
            Ok(v) if all_finite(&v) => Ok(v),
            Ok(_) => Err(None),
            Err(e) => Err(Some(e)),
        }
    };

    macro_rules! stage {
        ($expr:expr) => {
            match $expr {
                Ok(v) => v,
                Err(cause) => return Ok(Trial::Soft(cause)),
            }
        };
    }

    let y2 = combine(y, h, &[k1], &A2);
    let k2 = stage!(eval(t + C[0] * h, &y2, stats));
    let y3 = combine(y, h, &[k1, &k2], &A3);
    let k3 = stage!(eval(t + C[1] * h, &y3, stats));
    let y4 = combine(y, h, &[k1, &k2, &k3], &A4);
    let k4 = stage!(eval(t + C[2] * h, &y4, stats));
    let y5 = combine(y, h, &[k1, &k2, &k3, &k4], &A5);
    let k5 = stage!(eval(t + C[3] * h, &y5, stats));
    let y6 = combine(y, h, &[k1, &k2, &k3, &k4, &k5], &A6);
    let k6 = stage!(eval(t + C[4] * h, &y6, stats));

    let ks: [&[f64; N]; 6] = [k1, &k2, &k3, &k4, &k5, &k6];
    let y1 = combine(y, h, &ks, &B5[..6]);
    if !all_finite(&y1) {
        return Ok(Trial::Soft(None));
    }
    let k7 = stage!(eval(t + h, &y1, stats));

    let full: [&[f64; N]; 7] = [k1, &k2, &k3, &k4, &k5, &k6, &k7];
    let mut err_sq = 0.0;
    for i in 0..N {
        let mut e = 0.0;
        for (k, (b5, b4)) in full.iter().zip(B5.iter().zip(B4.iter())) {
            e += (b5 - b4) * k[i];
        }
        e *= h;
        let sc = ctrl.atol + ctrl.rtol * y[i].abs().max(y1[i].abs());
        err_sq += (e / sc) * (e / sc);
    }
    let err = (err_sq / N as f64).sqrt();
    if !err.is_finite() {
        return Ok(Trial::Soft(None));
    }
    Ok(Trial::Done(y1, k7, err))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_scalar(
        f: &mut dyn FnMut(f64, &[f64; 1]) -> Result<[f64; 1]>,
        span: (f64, f64),
        y0: f64,
        ctrl: &StepCtrl,
        mode: StepMode,
    ) -> Result<(f64, RunStats)> {
        let mut last = y0;
        let stats = integrate(
            f,
            span,
            [y0],
            ctrl,
            mode,
            &[],
            &mut |_, _| Ok(()),
            &mut |rec| {
                last = rec.y1[0];
                Ok(OnAccept::Continue)
            },
        )?;
        Ok((last, stats))
    }

    #[test]
    fn exponential_growth_matches_closed_form() {
        let ctrl = StepCtrl::default();
        let (y, stats) = run_scalar(
            &mut |_, y| Ok([y[0]]),
            (0.0, 2.0),
            1.0,
            &ctrl,
            StepMode::Adaptive,
        )
        .unwrap();
        assert!((y - 2.0f64.exp()).abs() < 1e-8, "got {y}");
        assert!(stats.n_accepted > 0);
        assert!(stats.max_defect < 10.0, "defect {}", stats.max_defect);
    }

    #[test]
    fn backward_integration_inverts_forward() {
        let ctrl = StepCtrl::default();
        let (y, _) = run_scalar(
            &mut |t, y| Ok([t.cos() * y[0]]),
            (0.0, 1.5),
            1.0,
            &ctrl,
            StepMode::Adaptive,
        )
        .unwrap();
        let (back, _) = run_scalar(
            &mut |t, y| Ok([t.cos() * y[0]]),
            (1.5, 0.0),
            y,
            &ctrl,
            StepMode::Adaptive,
        )
        .unwrap();
        assert!((back - 1.0).abs() < 1e-8, "got {back}");
    }

    #[test]
    fn samples_are_hit_exactly() {
        let ctrl = StepCtrl::default();
        let want = [0.0, 0.3, 0.77, 1.0];
        let mut seen = Vec::new();
        integrate(
            &mut |_, y: &[f64; 1]| Ok([-y[0]]),
            (0.0, 1.0),
            [1.0],
            &ctrl,
            StepMode::Adaptive,
            &want,
            &mut |t, y| {
                seen.push((t, y[0]));
                Ok(())
            },
            &mut |_| Ok(OnAccept::Continue),
        )
        .unwrap();
        assert_eq!(seen.len(), want.len());
        for ((t, y), w) in seen.iter().zip(want.iter()) {
            assert_eq!(t, w);
            assert!((y - (-t).exp()).abs() < 1e-9);
        }
    }

    #[test]
    fn fixed_step_halving_shows_fifth_order() {
        // Richardson check on y' = y·cos t over [0, 2]: halving the step of
        // a fifth-order scheme shrinks the endpoint error by about 32.
        let exact = (2.0f64.sin()).exp();
        let mut errs = Vec::new();
        for h in [0.1, 0.05] {
            let ctrl = StepCtrl::default();
            let (y, _) = run_scalar(
                &mut |t, y| Ok([t.cos() * y[0]]),
                (0.0, 2.0),
                1.0,
                &ctrl,
                StepMode::Fixed(h),
            )
            .unwrap();
            errs.push((y - exact).abs());
        }
        let ratio = errs[0] / errs[1];
        assert!(ratio > 16.0, "order ratio {ratio}, errors {errs:?}");
    }

    #[test]
    fn replace_resets_state_mid_run() {
        // Integrate y' = 1 and teleport the state to 0 the first time y
        // exceeds 0.5; the final value is then below 0.6.
        let ctrl = StepCtrl::default();
        let mut final_y = f64::NAN;
        integrate(
            &mut |_, _: &[f64; 1]| Ok([1.0]),
            (0.0, 1.0),
            [0.0],
            &ctrl,
            StepMode::Adaptive,
            &[1.0],
            &mut |_, y| {
                final_y = y[0];
                Ok(())
            },
            &mut |rec| {
                if rec.y1[0] > 0.5 && rec.y0[0] <= 0.5 {
                    Ok(OnAccept::Replace([0.0]))
                } else {
                    Ok(OnAccept::Continue)
                }
            },
        )
        .unwrap();
        assert!(final_y < 0.6, "got {final_y}");
    }

    #[test]
    fn pole_reports_step_underflow() {
        let ctrl = StepCtrl {
            max_steps: 100_000,
            ..StepCtrl::default()
        };
        let res = run_scalar(
            &mut |_, y| Ok([1.0 + y[0] * y[0]]),
            (0.0, 3.0),
            0.0,
            &ctrl,
            StepMode::Adaptive,
        );
        match res {
            Err(Error::StepUnderflow { t, .. }) => {
                assert!((t - std::f64::consts::FRAC_PI_2).abs() < 1e-3, "t = {t}");
            }
            other => panic!("expected step underflow, got {other:?}"),
        }
    }

    #[test]
    fn step_budget_is_enforced() {
        let ctrl = StepCtrl {
            max_steps: 10,
            ..StepCtrl::default()
        };
        let res = run_scalar(
            &mut |_, y| Ok([y[0]]),
            (0.0, 50.0),
            1.0,
            &ctrl,
            StepMode::Adaptive,
        );
        assert!(matches!(res, Err(Error::StepBudget { max_steps: 10, .. })));
    }
}
