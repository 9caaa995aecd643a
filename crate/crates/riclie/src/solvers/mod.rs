//! Numerical backends: quadrature, special functions, traces, and solvers.
//!
//! Everything downstream of the symbolic layer funnels through here.  The
//! module provides
//!
//! * [`quad`] — adaptive Gauss–Kronrod quadrature, the workhorse behind every
//!   "solution by quadratures";
//! * [`upper_gamma`] and friends — the incomplete gamma integrals some closed
//!   forms are written in;
//! * [`SolutionTrace`] — sampled solutions on the extended real line, with
//!   the chart bookkeeping that makes blow-through-infinity representable;
//! * [`oracle_integrate`] — the independent Runge–Kutta oracle with automatic
//!   chart switching, used to validate every analytic pipeline;
//! * [`solve_linear`] and [`solve_autonomous`] — the two quadrature-backed
//!   endgames every reduction ultimately lands on.

mod closed;
mod gamma;
mod oracle;
mod quad;

pub use crate::rk::StepCtrl;
pub use closed::{solve_autonomous, solve_linear, AutonomousOutcome, LinearEq};
pub use gamma::{upper_gamma, upper_gamma_ddt, upper_gamma_int};
pub use oracle::oracle_integrate;
pub use quad::{quad, QuadResult};

use serde::{Deserialize, Serialize};
use std::fmt;
use std::io;

use crate::algebra::{chordal_distance, ExtReal};
use crate::{Error, Result};

/// Which coordinate a trace point is expressed in.
///
/// `Direct` stores `y` itself; `Inverted` marks points carried through the
/// substitute variable `w = -1/y`, which stays small exactly where `y` is
/// large or infinite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Chart {
    /// The point was computed in the `y` coordinate.
    Direct,
    /// The point was computed in the `w = -1/y` coordinate.
    Inverted,
}

impl fmt::Display for Chart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Chart::Direct => write!(f, "direct"),
            Chart::Inverted => write!(f, "inverted"),
        }
    }
}

/// Counters and diagnostics accumulated while producing a trace.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct TraceStats {
    /// Accepted integration steps.
    pub accepted_steps: usize,
    /// Rejected (retried) integration steps.
    pub rejected_steps: usize,
    /// Right-hand-side evaluations.
    pub rhs_evals: usize,
    /// Largest normalized interpolation defect seen on an accepted step.
    pub max_defect: f64,
    /// Number of coordinate-chart switches performed mid-run.
    pub chart_switches: usize,
}

/// A solution sampled on a time grid, valued in the extended real line.
#[derive(Debug, Clone)]
pub struct SolutionTrace {
    /// Sample times, ordered along the direction of integration.
    pub times: Vec<f64>,
    /// Solution values; poles appear as [`ExtReal::Infinity`].
    pub values: Vec<ExtReal>,
    /// Chart each value was computed in.
    pub charts: Vec<Chart>,
    /// Integration diagnostics (zeroed for synthesized traces).
    pub stats: TraceStats,
}

/// Finite values at or below this magnitude compare in the plain metric;
/// everything else falls back to the chordal metric on the circle.
const PLAIN_METRIC_CUTOFF: f64 = 1e3;

/// Magnitude above which a value is recorded in the inverted chart.
pub(crate) const CHART_SWITCH_LEVEL: f64 = 2.0;

impl SolutionTrace {
    /// Builds a trace from values alone, deriving charts from magnitudes.
    pub fn from_values(times: Vec<f64>, values: Vec<ExtReal>) -> SolutionTrace {
        assert_eq!(
            times.len(),
            values.len(),
            "times and values must have equal length"
        );
        let charts = values
            .iter()
            .map(|v| match v.finite() {
                Some(x) if x.abs() <= CHART_SWITCH_LEVEL => Chart::Direct,
                _ => Chart::Inverted,
            })
            .collect();
        SolutionTrace {
            times,
            values,
            charts,
            stats: TraceStats::default(),
        }
    }

    /// Number of sample points.
    pub fn len(&self) -> usize {
        self.times.len()
    }

    /// Whether the trace has no samples.
    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Largest pointwise deviation from `other` over the common grid.
    ///
    /// Both traces must be sampled on the same times.  Pairs of moderate
    /// finite values compare by plain distance; pairs involving huge values
    /// or infinity compare by the chordal metric, which treats a pole as an
    /// ordinary point.
    pub fn sup_error(&self, other: &SolutionTrace) -> Result<f64> {
        if self.len() != other.len() {
            return Err(Error::MismatchedTraces(format!(
                "traces have {} and {} samples",
                self.len(),
                other.len()
            )));
        }
        let mut worst = 0.0f64;
        for i in 0..self.len() {
            let (ta, tb) = (self.times[i], other.times[i]);
            if (ta - tb).abs() > 1e-12 * ta.abs().max(1.0) {
                return Err(Error::MismatchedTraces(format!(
                    "sample {i} is at t={ta} in one trace and t={tb} in the other"
                )));
            }
            let d = point_distance(self.values[i], other.values[i]);
            if d > worst {
                worst = d;
            }
        }
        Ok(worst)
    }

    /// Writes the trace as CSV with header `t,y,chart`; poles print as `inf`.
    pub fn write_csv<W: io::Write>(&self, w: &mut W) -> io::Result<()> {
        writeln!(w, "t,y,chart")?;
        for i in 0..self.len() {
            match self.values[i] {
                ExtReal::Finite(v) => writeln!(w, "{},{},{}", self.times[i], v, self.charts[i])?,
                ExtReal::Infinity => writeln!(w, "{},inf,{}", self.times[i], self.charts[i])?,
            }
        }
        Ok(())
    }
}

/// Distance between two extended-real values in the mixed metric.
pub fn point_distance(a: ExtReal, b: ExtReal) -> f64 {
    match (a.finite(), b.finite()) {
        (Some(x), Some(y)) if x.abs() <= PLAIN_METRIC_CUTOFF && y.abs() <= PLAIN_METRIC_CUTOFF => {
            (x - y).abs()
        }
        _ => chordal_distance(a, b),
    }
}
