//! Named equation families with known classifications, used as test
//! subjects and exposed through the command line for experimentation.

use super::Case;
use crate::expr::Expr;
use crate::riccati::{Coeff, RiccatiEq};
use crate::solvers::{quad, upper_gamma};
use crate::{Error, Result};

use super::FnCoeff;

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

const QUAD_RTOL: f64 = 1e-11;
const QUAD_ATOL: f64 = 1e-14;

/// An equation with the classification it is known to have.
#[derive(Debug)]
pub struct Fixture {
    /// Short kebab-case family name.
    pub name: &'static str,
    /// The equation instance.
    pub eq: RiccatiEq,
    /// The classification the cascade is expected to report.
    pub expected: Case,
}

/// A family with `b1` built so the rescaling invariant is exactly the
/// constant `c`: `b1 = c·√(b0·b2) − ½(ḃ2/b2 − ḃ0/b0)`.
///
/// Requires `b0·b2 > 0` on the domain.
pub fn allen_stein(b0: Expr, b2: Expr, c: f64, domain: (f64, f64)) -> Result<Fixture> {
    let b1 = Expr::number(c) * (b0.clone() * b2.clone()).sqrt()
        - Expr::number(0.5)
            * (b2.derivative() / b2.clone() - b0.derivative() / b0.clone());
    let eq = RiccatiEq::new(b0, b1, b2, domain)?;
    Ok(Fixture {
        name: "allen-stein",
        eq,
        expected: Case::CtuIntegrable { k: c },
    })
}

/// Scale of the Rao–Ukidave-style family: the solution of `v̇ = b1·v + k·b0`
/// with `v(t0) = 1`, evaluated by nested quadrature; the derivative comes
/// exactly from the defining equation.  Values are memoized because the
/// classification cascade revisits the same grid points many times.
struct QuadratureScale {
    b0: Expr,
    b1: Expr,
    k: f64,
    t0: f64,
    cache: Mutex<HashMap<u64, f64>>,
}

impl QuadratureScale {
    fn v(&self, t: f64) -> Result<f64> {
        if t == self.t0 {
            return Ok(1.0);
        }
        if let Some(v) = self.cache.lock().unwrap().get(&t.to_bits()) {
            return Ok(*v);
        }
        let big_b = quad(&mut |u| self.b1.eval(u), self.t0, t, QUAD_RTOL, QUAD_ATOL)?.value;
        let mut integrand = |s: f64| -> Result<f64> {
            let bs = quad(&mut |u| self.b1.eval(u), self.t0, s, QUAD_RTOL, QUAD_ATOL)?.value;
            Ok((-bs).exp() * self.b0.eval(s)?)
        };
        let i = quad(&mut integrand, self.t0, t, QUAD_RTOL, QUAD_ATOL)?.value;
        let v = big_b.exp() * (1.0 + self.k * i);
        if !v.is_finite() {
            return Err(Error::NonFinite {
                what: "quadrature-defined scale v".into(),
                t,
            });
        }
        self.cache.lock().unwrap().insert(t.to_bits(), v);
        Ok(v)
    }
}

/// A family where `b2 = b0/(c·v²)` for the quadrature-defined scale `v`
/// solving `v̇ = b1·v + k·b0`, `v(t0) = 1`.  Requires `c > 0`, `b0` of one
/// sign, and `v > 0` on the domain; the rescaling invariant is then the
/// constant `−k·sg(b0)·√c`.
pub fn rao_ukidave(c: f64, k: f64, b0: Expr, b1: Expr, domain: (f64, f64)) -> Result<Fixture> {
    if !(c.is_finite() && c > 0.0) {
        return Err(Error::Precondition(format!(
            "this family needs a positive constant c, got {c}"
        )));
    }
    let scale = Arc::new(QuadratureScale {
        b0: b0.clone(),
        b1: b1.clone(),
        k,
        t0: domain.0,
        cache: Mutex::new(HashMap::new()),
    });
    let sg = b0.eval(0.5 * (domain.0 + domain.1))?.signum();

    let b0v = b0.clone();
    let sv = Arc::clone(&scale);
    let sd = Arc::clone(&scale);
    let b0d = b0.clone();
    let b2 = FnCoeff {
        name: format!("({})/({c}*v(t)^2)", b0.render()),
        f: Box::new(move |t| Ok(b0v.eval(t)? / (c * sv.v(t)?.powi(2)))),
        df: Box::new(move |t| {
            let v = sd.v(t)?;
            let dv = sd.b1.eval(t)? * v + sd.k * sd.b0.eval(t)?;
            let x = b0d.eval(t)?;
            let dx = b0d.deriv(t)?;
            Ok(dx / (c * v * v) - 2.0 * x * dv / (c * v * v * v))
        }),
    }
    .coeff();

    let eq = RiccatiEq::new(Coeff::Sym(b0), Coeff::Sym(b1), b2, domain)?;
    Ok(Fixture {
        name: "rao-ukidave",
        eq,
        expected: Case::CtuIntegrable {
            k: -k * sg * c.sqrt(),
        },
    })
}

/// The family `(F, L + Ḟ/F, −K/F)`; its rescaling invariant is `L/√|K|`.
pub fn kovalevskaya(f: Expr, l: f64, k: f64, domain: (f64, f64)) -> Result<Fixture> {
    if k == 0.0 {
        return Err(Error::Precondition(
            "this family needs a nonzero constant K".into(),
        ));
    }
    let b0 = f.clone();
    let b1 = Expr::number(l) + f.derivative() / f.clone();
    let b2 = Expr::number(-k) / f;
    let eq = RiccatiEq::new(b0, b1, b2, domain)?;
    Ok(Fixture {
        name: "kovalevskaya",
        eq,
        expected: Case::CtuIntegrable {
            k: l / k.abs().sqrt(),
        },
    })
}

/// The family `(−c·G², −(2bG − Ġ/G), −1)` for positive `G`; its rescaling
/// invariant is `−2b/√c`.
pub fn hong_xiang(g: Expr, b: f64, c: f64, domain: (f64, f64)) -> Result<Fixture> {
    if !(c.is_finite() && c > 0.0) {
        return Err(Error::Precondition(format!(
            "this family needs a positive constant c, got {c}"
        )));
    }
    let b0 = Expr::number(-c) * g.clone() * g.clone();
    let b1 = -(Expr::number(2.0 * b) * g.clone() - g.derivative() / g);
    let b2 = Expr::number(-1.0);
    let eq = RiccatiEq::new(b0, b1, b2, domain)?;
    Ok(Fixture {
        name: "hong-xiang",
        eq,
        expected: Case::CtuIntegrable {
            k: -2.0 * b / c.sqrt(),
        },
    })
}

/// The equation `(−n/t, 1 + n/t, −1)` on `(0.1, 10)`; the constant `1` is a
/// particular solution, so it linearizes by a constant.
pub fn hovy(n: f64) -> Result<Fixture> {
    let domain = (0.1, 10.0);
    let t = Expr::time();
    let b0 = Expr::number(-n) / t.clone();
    let b1 = Expr::number(1.0) + Expr::number(n) / t;
    let b2 = Expr::number(-1.0);
    let eq = RiccatiEq::new(b0, b1, b2, domain)?;
    Ok(Fixture {
        name: "hovy",
        eq,
        expected: Case::LinearizableByConstant {
            c: 1.0,
            k_invariant: 1.0,
        },
    })
}

/// The general solution of the [`hovy`] family in closed form,
/// `y(t) = 1 − tⁿ·e^(−t) / (Γ(n+1, t) + K)`, as a coefficient with an exact
/// derivative.
///
/// `K` selects the trajectory through the pencil; `K ≥ 0` keeps the
/// denominator positive on all of `t > 0`, while negative `K` admits a pole
/// where `Γ(n+1, t)` decays through `−K`.
pub fn hovy_solution(n: f64, big_k: f64) -> Result<Coeff> {
    if !(n.is_finite() && big_k.is_finite()) {
        return Err(Error::Precondition(format!(
            "the closed form needs finite parameters, got n = {n}, K = {big_k}"
        )));
    }
    let parts = move |t: f64| -> Result<(f64, f64)> {
        if t <= 0.0 {
            return Err(Error::Domain {
                what: "the closed-form solution lives on t > 0".into(),
                t,
            });
        }
        let u = (n * t.ln() - t).exp();
        let g = upper_gamma(n + 1.0, t)? + big_k;
        Ok((u, g))
    };
    let slope_parts = parts;
    let value = move |t: f64| -> Result<f64> {
        let (u, g) = parts(t)?;
        let y = 1.0 - u / g;
        if !y.is_finite() {
            return Err(Error::NonFinite {
                what: "closed-form solution value".into(),
                t,
            });
        }
        Ok(y)
    };
    let slope = move |t: f64| -> Result<f64> {
        let (u, g) = slope_parts(t)?;
        let du = u * (n / t - 1.0);
        let dy = -du / g - (u / g) * (u / g);
        if !dy.is_finite() {
            return Err(Error::NonFinite {
                what: "closed-form solution slope".into(),
                t,
            });
        }
        Ok(dy)
    };
    Ok(FnCoeff {
        name: format!("1 - t^{n}*exp(-t)/(Γ({}, t) + {big_k})", n + 1.0),
        f: Box::new(value),
        df: Box::new(slope),
    }
    .coeff())
}

/// The family `(P, Q, k·(Q − k·P))`; the constant `−1/k` is always a
/// particular solution.
pub fn ibragimov(p: Expr, q: Expr, k: f64, domain: (f64, f64)) -> Result<Fixture> {
    if k == 0.0 {
        return Err(Error::Precondition(
            "this family needs a nonzero constant k".into(),
        ));
    }
    let b0 = p.clone();
    let b1 = q.clone();
    let b2 = Expr::number(k) * (q - Expr::number(k) * p);
    let eq = RiccatiEq::new(b0, b1, b2, domain)?;
    Ok(Fixture {
        name: "ibragimov",
        eq,
        expected: Case::LinearizableByConstant {
            c: -1.0 / k,
            k_invariant: -k,
        },
    })
}

/// One representative instance of every family, with fixed parameters.
pub fn canonical() -> Result<Vec<Fixture>> {
    let plain = |s: &str| Expr::parse_plain(s);
    Ok(vec![
        allen_stein(
            plain("1 + 0.25*sin(t)")?,
            plain("1 + 0.25*cos(t)")?,
            0.8,
            (0.0, 2.0),
        )?,
        rao_ukidave(4.0, 0.5, plain("1")?, plain("sin(t)")?, (0.0, 2.0))?,
        kovalevskaya(plain("exp(t)")?, 2.0, 4.0, (0.0, 2.0))?,
        hong_xiang(plain("exp(t)")?, 1.0, 4.0, (0.0, 2.0))?,
        hovy(2.0)?,
        ibragimov(plain("2 + cos(t)")?, plain("1")?, 3.0, (0.0, 2.0))?,
    ])
}
