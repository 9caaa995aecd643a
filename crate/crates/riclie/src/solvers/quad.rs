//! Adaptive Gauss–Kronrod quadrature.
//!
//! A 15-point Kronrod rule with its embedded 7-point Gauss rule estimates
//! each subinterval's integral and error; the driver repeatedly bisects the
//! worst subinterval until the summed error bound meets the requested
//! tolerance.  This favours robustness over cleverness — the integrands here
//! are smooth coefficient combinations, occasionally with boundary layers
//! from exponential factors.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::{Error, Result};

/// Positive abscissae of the 15-point Kronrod rule on [-1, 1].
const XK: [f64; 8] = [
    0.000000000000000000000000000000000,
    0.207784955007898467600689403773245,
    0.405845151377397166906606412076961,
    0.586087235467691130294144838258730,
    0.741531185599394439863864773280788,
    0.864864423359769072789712788640926,
    0.949107912342758524526189684047851,
    0.991455371120812639206854697526329,
];

/// Kronrod weights matching `XK`.
const WK: [f64; 8] = [
    0.209482141084727828012999174891714,
    0.204432940075298892414161999234649,
    0.190350578064785409913256402421014,
    0.169004726639267902826583426598550,
    0.140653259715525918745189590510238,
    0.104790010322250183839876322541518,
    0.063092092629978553290700663189204,
    0.022935322010529224963732008058970,
];

/// Gauss weights for the embedded 7-point rule (nodes `XK[0,2,4,6]`).
const WG: [f64; 4] = [
    0.417959183673469387755102040816327,
    0.381830050505118944950369775488975,
    0.279705391489276667901467771423780,
    0.129484966168869693270611432679082,
];

/// Hard cap on subdivisions before giving up.
const MAX_INTERVALS: usize = 2000;

/// Result of an adaptive quadrature run.
#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    /// Estimated integral.
    pub value: f64,
    /// Summed error bound over all subintervals.
    pub err_bound: f64,
    /// Integrand evaluations performed.
    pub evals: usize,
    /// Final number of subintervals.
    pub intervals: usize,
}

struct Segment {
    lo: f64,
    hi: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

fn kronrod_panel(
    f: &mut dyn FnMut(f64) -> Result<f64>,
    lo: f64,
    hi: f64,
    evals: &mut usize,
) -> Result<Segment> {
    let mid = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let mut fk = [0.0f64; 15];
    for (j, &x) in XK.iter().enumerate() {
        if j == 0 {
            fk[7] = eval_checked(f, mid, evals)?;
        } else {
            fk[7 - j] = eval_checked(f, mid - half * x, evals)?;
            fk[7 + j] = eval_checked(f, mid + half * x, evals)?;
        }
    }
    let mut k15 = WK[0] * fk[7];
    for j in 1..8 {
        k15 += WK[j] * (fk[7 - j] + fk[7 + j]);
    }
    let mut g7 = WG[0] * fk[7];
    for (i, &w) in WG.iter().enumerate().skip(1) {
        let j = 2 * i;
        g7 += w * (fk[7 - j] + fk[7 + j]);
    }
    let value = k15 * half;
    let err = ((k15 - g7) * half).abs();
    Ok(Segment {
        lo,
        hi,
        value,
        err,
    })
}

fn eval_checked(f: &mut dyn FnMut(f64) -> Result<f64>, t: f64, evals: &mut usize) -> Result<f64> {
    *evals += 1;
    let v = f(t)?;
    if !v.is_finite() {
        return Err(Error::NonFinite {
            what: "integrand".into(),
            t,
        });
    }
    Ok(v)
}

/// Integrates `f` over `[lo, hi]` to tolerance `max(atol, rtol·|result|)`.
///
/// The bounds may be given in either order; a reversed interval negates the
/// result.  Fails with [`Error::QuadNoConverge`] when the requested tolerance
/// is unreachable within the subdivision budget.
pub fn quad(
    f: &mut dyn FnMut(f64) -> Result<f64>,
    lo: f64,
    hi: f64,
    rtol: f64,
    atol: f64,
) -> Result<QuadResult> {
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(Error::Invalid(format!(
            "quadrature bounds must be finite, got [{lo}, {hi}]"
        )));
    }
    if !(rtol.is_finite() && rtol >= 0.0 && atol.is_finite() && atol >= 0.0) || (rtol == 0.0 && atol == 0.0)
    {
        return Err(Error::Invalid(format!(
            "quadrature tolerances must be nonnegative and not both zero, got rtol={rtol}, atol={atol}"
        )));
    }
    if lo == hi {
        return Ok(QuadResult {
            value: 0.0,
            err_bound: 0.0,
            evals: 0,
            intervals: 0,
        });
    }
    let (a, b, sign) = if lo < hi { (lo, hi, 1.0) } else { (hi, lo, -1.0) };

    let mut evals = 0usize;
    let mut heap = BinaryHeap::new();
    heap.push(kronrod_panel(f, a, b, &mut evals)?);
    let width_floor = 50.0 * f64::EPSILON * a.abs().max(b.abs()).max(1.0);

    loop {
        let total: f64 = heap.iter().map(|s| s.value).sum();
        let err: f64 = heap.iter().map(|s| s.err).sum();
        let tol = atol.max(rtol * total.abs());
        if err <= tol {
            return Ok(QuadResult {
                value: sign * total,
                err_bound: err,
                evals,
                intervals: heap.len(),
            });
        }
        if heap.len() >= MAX_INTERVALS {
            return Err(Error::QuadNoConverge {
                achieved: err,
                requested: tol,
            });
        }
        let worst = heap.pop().expect("heap is nonempty");
        if worst.hi - worst.lo <= width_floor {
            return Err(Error::QuadNoConverge {
                achieved: err,
                requested: tol,
            });
        }
        let mid = 0.5 * (worst.lo + worst.hi);
        heap.push(kronrod_panel(f, worst.lo, mid, &mut evals)?);
        heap.push(kronrod_panel(f, mid, worst.hi, &mut evals)?);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn integral(
        f: &mut dyn FnMut(f64) -> Result<f64>,
        lo: f64,
        hi: f64,
    ) -> f64 {
        quad(f, lo, hi, 1e-13, 1e-300).unwrap().value
    }

    #[test]
    fn polynomial_is_exact() {
        let v = integral(&mut |x| Ok(3.0 * x * x), 0.0, 2.0);
        assert!((v - 8.0).abs() < 1e-13);
    }

    #[test]
    fn oscillatory_integrand_converges() {
        let v = integral(&mut |x| Ok((10.0 * x).sin()), 0.0, 3.0);
        let exact = (1.0 - (30.0f64).cos()) / 10.0;
        assert!((v - exact).abs() < 1e-12, "got {v}, want {exact}");
    }

    #[test]
    fn boundary_layer_converges() {
        let v = integral(&mut |x: f64| Ok((-50.0 * x).exp()), 0.0, 1.0);
        let exact = (1.0 - (-50.0f64).exp()) / 50.0;
        assert!((v - exact).abs() < 1e-13 * exact.abs().max(1.0));
    }

    #[test]
    fn reversed_bounds_negate() {
        let fwd = integral(&mut |x| Ok(x.cos()), 0.0, 1.0);
        let back = integral(&mut |x| Ok(x.cos()), 1.0, 0.0);
        assert!((fwd + back).abs() < 1e-14);
    }

    #[test]
    fn integrand_errors_propagate() {
        let r = quad(
            &mut |x| {
                if x > 0.5 {
                    Err(Error::Domain {
                        what: "test".into(),
                        t: x,
                    })
                } else {
                    Ok(1.0)
                }
            },
            0.0,
            1.0,
            1e-10,
            0.0,
        );
        assert!(matches!(r, Err(Error::Domain { .. })));
    }

    #[test]
    fn unreachable_tolerance_reports_no_convergence() {
        // |x|^(-1/2) is integrable but its derivative blows up at 0; with an
        // absurd tolerance the subdivision budget runs out.
        let r = quad(
            &mut |x: f64| Ok(x.abs().max(1e-300).powf(-0.5)),
            0.0,
            1.0,
            1e-16,
            1e-320,
        );
        assert!(matches!(r, Err(Error::QuadNoConverge { .. })));
    }
}
