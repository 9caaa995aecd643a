//! The independent numerical oracle on the compactified line.
//!
//! Integrates a Riccati equation with the embedded Runge–Kutta pair while
//! tracking the solution in whichever coordinate keeps it small: the direct
//! variable `y`, or `w = -1/y` once `|y|` grows past a threshold.  Since `w`
//! satisfies the Riccati equation with coefficient vector `(b2, -b1, b0)`,
//! the switch is loss-free and trajectories pass through poles as ordinary
//! zero crossings of `w`.  Every analytic solution path in the crate is
//! validated against this routine.

use std::cell::Cell;

use super::{Chart, SolutionTrace, TraceStats, CHART_SWITCH_LEVEL};
use crate::algebra::ExtReal;
use crate::riccati::RiccatiEq;
use crate::rk::{integrate, OnAccept, StepCtrl, StepMode};
use crate::Result;

/// Integrates `eq` from `(span.0, y0)` to `span.1`, sampling at `samples`.
///
/// `samples` must be sorted along the direction of integration and lie
/// within `span`; they become the returned trace's grid.  The initial value
/// may be the point at infinity — integration then starts in the inverted
/// chart at `w = 0`.
pub fn oracle_integrate(
    eq: &RiccatiEq,
    span: (f64, f64),
    y0: ExtReal,
    samples: &[f64],
    ctrl: &StepCtrl,
) -> Result<SolutionTrace> {
    eq.check_span(span)?;
    let inv = eq.inverted();

    let chart = Cell::new(Chart::Direct);
    let switches = Cell::new(0usize);
    let state0 = match y0 {
        ExtReal::Finite(v) if v.abs() <= CHART_SWITCH_LEVEL => [v],
        ExtReal::Finite(v) => {
            chart.set(Chart::Inverted);
            [-1.0 / v]
        }
        ExtReal::Infinity => {
            chart.set(Chart::Inverted);
            [0.0]
        }
    };

    let mut times = Vec::with_capacity(samples.len());
    let mut values = Vec::with_capacity(samples.len());
    let mut charts = Vec::with_capacity(samples.len());

    let stats = {
        let chart_ref = &chart;
        let switches_ref = &switches;
        let mut rhs = move |t: f64, y: &[f64; 1]| -> Result<[f64; 1]> {
            let v = match chart_ref.get() {
                Chart::Direct => eq.rhs(t, y[0])?,
                Chart::Inverted => inv.rhs(t, y[0])?,
            };
            Ok([v])
        };
        let mut on_sample = |t: f64, y: &[f64; 1]| -> Result<()> {
            times.push(t);
            charts.push(chart_ref.get());
            values.push(match chart_ref.get() {
                Chart::Direct => ExtReal::Finite(y[0]),
                Chart::Inverted => ExtReal::Finite(y[0]).inverted(),
            });
            Ok(())
        };
        let mut on_accept = |rec: &crate::rk::StepRecord<'_, 1>| -> Result<OnAccept<1>> {
            let v = rec.y1[0];
            if v.abs() > CHART_SWITCH_LEVEL {
                switches_ref.set(switches_ref.get() + 1);
                chart_ref.set(match chart_ref.get() {
                    Chart::Direct => Chart::Inverted,
                    Chart::Inverted => Chart::Direct,
                });
                return Ok(OnAccept::Replace([-1.0 / v]));
            }
            Ok(OnAccept::Continue)
        };
        integrate(
            &mut rhs,
            span,
            state0,
            ctrl,
            StepMode::Adaptive,
            samples,
            &mut on_sample,
            &mut on_accept,
        )?
    };

    Ok(SolutionTrace {
        times,
        values,
        charts,
        stats: TraceStats {
            accepted_steps: stats.n_accepted,
            rejected_steps: stats.n_rejected,
            rhs_evals: stats.n_rhs,
            max_defect: stats.max_defect,
            chart_switches: switches.get(),
        },
    })
}
