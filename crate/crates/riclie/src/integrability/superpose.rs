//! The nonlinear superposition rule: every further solution of a Riccati
//! equation is a constant cross-ratio away from three known ones.

use crate::algebra::{mobius_raw, ExtReal};
use crate::solvers::{point_distance, SolutionTrace};
use crate::{Error, Result};

/// How close two solution values may come (in the metric of
/// [`point_distance`]) before the rule degenerates.
const COINCIDENCE_TOL: f64 = 1e-10;

/// Combines three pointwise-distinct solutions into the one labelled by the
/// mixing constant `k`:
///
/// ```text
/// y = (y1·(y3 − y2) − k·y2·(y1 − y3)) / ((y3 − y2) − k·(y1 − y3))
/// ```
///
/// `k = 0` returns `y1`, `k = ∞` returns `y2`, and values at `∞` in the
/// inputs are handled by the linear-fractional limit of the formula.  All
/// traces must share one time grid.
pub fn superposition(
    y1: &SolutionTrace,
    y2: &SolutionTrace,
    y3: &SolutionTrace,
    k: ExtReal,
) -> Result<SolutionTrace> {
    same_grid(y1, y2)?;
    same_grid(y1, y3)?;
    let mut values = Vec::with_capacity(y1.times.len());
    for ((t, a), (b, c)) in y1
        .times
        .iter()
        .zip(y1.values.iter())
        .zip(y2.values.iter().zip(y3.values.iter()))
    {
        let m = super_matrix(*t, *a, *b, *c)?;
        // At the collapsing constants the formula is one of the inputs
        // identically; return it without round-off.
        values.push(match k {
            ExtReal::Finite(x) if x == 0.0 => *a,
            ExtReal::Infinity => *b,
            _ => mobius_raw(&m, k),
        });
    }
    Ok(SolutionTrace::from_values(y1.times.clone(), values))
}

/// Solves the superposition formula for its constant: the `k` that makes
/// the combination of `(v1, v2, v3)` pass through `y0`.
pub fn superposition_constant(
    v1: ExtReal,
    v2: ExtReal,
    v3: ExtReal,
    y0: ExtReal,
) -> Result<ExtReal> {
    let [a, b, c, d] = super_matrix(f64::NAN, v1, v2, v3)?;
    Ok(mobius_raw(&[d, -b, -c, a], y0))
}

fn same_grid(a: &SolutionTrace, b: &SolutionTrace) -> Result<()> {
    if a.times.len() != b.times.len()
        || a.times
            .iter()
            .zip(b.times.iter())
            .any(|(x, y)| (x - y).abs() > 1e-12 * (1.0 + x.abs()))
    {
        return Err(Error::MismatchedTraces(
            "superposition inputs use different time grids".into(),
        ));
    }
    Ok(())
}

/// The matrix whose Möbius action on `k` evaluates the superposition
/// formula, with the appropriate limit rows when an input sits at `∞`.
fn super_matrix(t: f64, v1: ExtReal, v2: ExtReal, v3: ExtReal) -> Result<[f64; 4]> {
    for (p, q) in [(v1, v2), (v1, v3), (v2, v3)] {
        if point_distance(p, q) <= COINCIDENCE_TOL {
            let place = if t.is_nan() {
                String::new()
            } else {
                format!(" near t = {t}")
            };
            return Err(Error::Precondition(format!(
                "superposition inputs coincide{place}; the rule needs three distinct solutions"
            )));
        }
    }
    Ok(match (v1, v2, v3) {
        (ExtReal::Finite(a), ExtReal::Finite(b), ExtReal::Finite(c)) => {
            [-b * (a - c), a * (c - b), -(a - c), c - b]
        }
        (ExtReal::Infinity, ExtReal::Finite(b), ExtReal::Finite(c)) => [-b, c - b, -1.0, 0.0],
        (ExtReal::Finite(a), ExtReal::Infinity, ExtReal::Finite(c)) => {
            [-(a - c), -a, 0.0, -1.0]
        }
        (ExtReal::Finite(a), ExtReal::Finite(b), ExtReal::Infinity) => [b, a, 1.0, 1.0],
        // Two inputs at ∞ would have failed the distinctness check.
        _ => unreachable!("two superposition inputs at infinity"),
    })
}
