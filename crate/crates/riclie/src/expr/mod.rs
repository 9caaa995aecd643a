//! Scalar expressions of time, with exact forward-mode derivatives.
//!
//! An [`Expr`] is an immutable tree over the time variable `t`, numeric literals,
//! named constants, arithmetic, a fixed set of elementary functions, powers with
//! constant exponents, and a derivative operator `D(...)`. Derivatives are
//! evaluated with dual numbers (values paired with derivative components), not by
//! symbolic rewriting: a `D` node lifts evaluation one level up a fixed tower of
//! nested duals and projects the derivative component back down.

mod ast;
mod num;
mod parse;

pub use ast::{Ast, UnaryFn};
pub use num::{AdScalar, Dual, Field, MAX_DERIV_DEPTH};

use std::collections::BTreeMap;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::Arc;

use crate::{Error, Result};

/// Flags raised during an evaluation.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct EvalMeta {
    /// Set when `abs` was differentiated at its kink (the right-derivative
    /// convention `sign(0) = +1` was used).
    pub nonsmooth: bool,
}

/// An immutable scalar expression of time.
///
/// Cloning is cheap (shared tree) and the type is `Send + Sync`, so expressions
/// can be shared across threads freely.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    ast: Arc<Ast>,
}

impl Expr {
    /// Parse `src` against the grammar, resolving identifiers other than `t` and
    /// the function names through `params`.
    pub fn parse(src: &str, params: &BTreeMap<String, f64>) -> Result<Expr> {
        Ok(Expr { ast: parse::parse(src, params)? })
    }

    /// Parse an expression that uses no named parameters.
    pub fn parse_plain(src: &str) -> Result<Expr> {
        Self::parse(src, &BTreeMap::new())
    }

    /// A numeric literal. Panics on a non-finite value (programming error).
    pub fn number(v: f64) -> Expr {
        assert!(v.is_finite(), "expression literals must be finite, got {v}");
        Expr { ast: Arc::new(Ast::Num(v)) }
    }

    /// The time variable `t`.
    pub fn time() -> Expr {
        Expr { ast: Arc::new(Ast::Time) }
    }

    /// A named constant.
    pub fn param(name: &str, value: f64) -> Result<Expr> {
        if parse::RESERVED.contains(&name) {
            return Err(Error::ReservedParam { name: name.to_string() });
        }
        if !value.is_finite() {
            return Err(Error::Invalid(format!("parameter `{name}` has non-finite value {value}")));
        }
        Ok(Expr { ast: Arc::new(Ast::Param { name: name.into(), value }) })
    }

    fn fun(self, f: UnaryFn) -> Expr {
        Expr { ast: Arc::new(Ast::Fun(f, self.ast)) }
    }

    pub fn exp(self) -> Expr {
        self.fun(UnaryFn::Exp)
    }
    pub fn ln(self) -> Expr {
        self.fun(UnaryFn::Ln)
    }
    pub fn sqrt(self) -> Expr {
        self.fun(UnaryFn::Sqrt)
    }
    pub fn sin(self) -> Expr {
        self.fun(UnaryFn::Sin)
    }
    pub fn cos(self) -> Expr {
        self.fun(UnaryFn::Cos)
    }
    pub fn tan(self) -> Expr {
        self.fun(UnaryFn::Tan)
    }
    pub fn abs(self) -> Expr {
        self.fun(UnaryFn::Abs)
    }

    /// Power with a constant exponent.
    pub fn pow(self, e: f64) -> Expr {
        assert!(e.is_finite(), "exponents must be finite, got {e}");
        Expr { ast: Arc::new(Ast::Pow(self.ast, e)) }
    }

    /// The time derivative as an expression (a `D(...)` node).
    pub fn derivative(&self) -> Expr {
        Expr { ast: Arc::new(Ast::Deriv(self.ast.clone())) }
    }

    /// Evaluate at time `t`.
    pub fn eval(&self, t: f64) -> Result<f64> {
        self.eval_with_meta(t).map(|(v, _)| v)
    }

    /// Evaluate at time `t`, also returning evaluation flags.
    pub fn eval_with_meta(&self, t: f64) -> Result<(f64, EvalMeta)> {
        let mut meta = EvalMeta::default();
        let v = self.eval_scalar(t, &mut meta)?;
        Ok((v, meta))
    }

    /// First derivative at time `t` (one dual level; no tree rewriting).
    pub fn deriv(&self, t: f64) -> Result<f64> {
        let mut meta = EvalMeta::default();
        let v = self.eval_scalar(Dual::seeded(t), &mut meta)?;
        Ok(v.eps)
    }

    /// Evaluate at a generic scalar: plain `f64` or any level of the dual tower.
    /// This is what lets already-differentiated expressions be differentiated
    /// again from the outside.
    pub fn eval_scalar<S: AdScalar>(&self, t: S, meta: &mut EvalMeta) -> Result<S> {
        let v = eval_node(&self.ast, t, meta)?;
        if !v.all_finite() {
            return Err(Error::NonFinite { what: clip(&self.render()), t: t.value() });
        }
        Ok(v)
    }

    /// Render to text that reparses to a structurally equal tree.
    pub fn render(&self) -> String {
        ast::render(&self.ast)
    }

    /// Collect the named constants appearing in the tree. Fails if one name is
    /// bound to two different values (possible when composing expressions built
    /// with conflicting bindings).
    pub fn params(&self) -> Result<BTreeMap<String, f64>> {
        let mut out = BTreeMap::new();
        collect_params(&self.ast, &mut out)?;
        Ok(out)
    }

}

fn collect_params(ast: &Ast, out: &mut BTreeMap<String, f64>) -> Result<()> {
    match ast {
        Ast::Param { name, value } => {
            if let Some(prev) = out.insert(name.to_string(), *value) {
                if prev != *value {
                    return Err(Error::Invalid(format!(
                        "parameter `{name}` bound to both {prev} and {value}"
                    )));
                }
            }
        }
        Ast::Add(a, b) | Ast::Sub(a, b) | Ast::Mul(a, b) | Ast::Div(a, b) => {
            collect_params(a, out)?;
            collect_params(b, out)?;
        }
        Ast::Neg(a) | Ast::Pow(a, _) | Ast::Fun(_, a) | Ast::Deriv(a) => collect_params(a, out)?,
        Ast::Num(_) | Ast::Time => {}
    }
    Ok(())
}

fn clip(s: &str) -> String {
    if s.len() <= 80 {
        s.to_string()
    } else {
        let mut end = 80;
        while !s.is_char_boundary(end) {
            end -= 1;
        }
        format!("{}…", &s[..end])
    }
}

fn eval_node<S: AdScalar>(ast: &Ast, t: S, meta: &mut EvalMeta) -> Result<S> {
    Ok(match ast {
        Ast::Num(v) => S::from_f64(*v),
        Ast::Time => t,
        Ast::Param { value, .. } => S::from_f64(*value),
        Ast::Add(a, b) => eval_node(a, t, meta)? + eval_node(b, t, meta)?,
        Ast::Sub(a, b) => eval_node(a, t, meta)? - eval_node(b, t, meta)?,
        Ast::Mul(a, b) => eval_node(a, t, meta)? * eval_node(b, t, meta)?,
        Ast::Div(a, b) => {
            let den = eval_node(b, t, meta)?;
            if den.value() == 0.0 {
                return Err(Error::Domain { what: "division by zero".into(), t: t.value() });
            }
            eval_node(a, t, meta)? / den
        }
        Ast::Neg(a) => -eval_node(a, t, meta)?,
        Ast::Pow(a, p) => {
            let base = eval_node(a, t, meta)?;
            let integer_exp = *p == p.trunc();
            if !integer_exp && base.value() < 0.0 {
                return Err(Error::Domain {
                    what: format!("negative base raised to non-integer exponent {p}"),
                    t: t.value(),
                });
            }
            if base.value() == 0.0 && *p < 0.0 {
                return Err(Error::Domain {
                    what: format!("zero base raised to negative exponent {p}"),
                    t: t.value(),
                });
            }
            base.powc(*p)
        }
        Ast::Fun(f, a) => {
            let v = eval_node(a, t, meta)?;
            match f {
                UnaryFn::Exp => v.exp(),
                UnaryFn::Ln => {
                    if v.value() <= 0.0 {
                        return Err(Error::Domain {
                            what: format!("ln of non-positive value {}", v.value()),
                            t: t.value(),
                        });
                    }
                    v.ln()
                }
                UnaryFn::Sqrt => {
                    if v.value() < 0.0 {
                        return Err(Error::Domain {
                            what: format!("sqrt of negative value {}", v.value()),
                            t: t.value(),
                        });
                    }
                    v.sqrt()
                }
                UnaryFn::Sin => v.sin(),
                UnaryFn::Cos => v.cos(),
                UnaryFn::Tan => v.tan(),
                UnaryFn::Abs => {
                    let (r, kink) = v.abs_kink();
                    if kink {
                        meta.nonsmooth = true;
                    }
                    r
                }
            }
        }
        Ast::Deriv(a) => {
            if !S::CAN_LIFT {
                return Err(Error::DerivTooDeep { max: MAX_DERIV_DEPTH });
            }
            let up = eval_node::<S::Up>(a, t.lift_seed(), meta)?;
            S::eps_of(up)
        }
    })
}

impl Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        Expr { ast: Arc::new(Ast::Add(self.ast, rhs.ast)) }
    }
}

impl Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        Expr { ast: Arc::new(Ast::Sub(self.ast, rhs.ast)) }
    }
}

impl Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        Expr { ast: Arc::new(Ast::Mul(self.ast, rhs.ast)) }
    }
}

impl Div for Expr {
    type Output = Expr;
    fn div(self, rhs: Expr) -> Expr {
        Expr { ast: Arc::new(Ast::Div(self.ast, rhs.ast)) }
    }
}

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        match &*self.ast {
            Ast::Num(v) => Expr::number(-v),
            _ => Expr { ast: Arc::new(Ast::Neg(self.ast)) },
        }
    }
}

/// A finite sorted evaluation grid with the tolerance used by constancy and
/// residual checks on it.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    points: Vec<f64>,
    tolerance: f64,
}

impl Grid {
    pub const DEFAULT_POINTS: usize = 256;
    pub const DEFAULT_TOLERANCE: f64 = 1e-8;
    pub const MIN_POINTS: usize = 8;

    /// Chebyshev–Lobatto points on `[lo, hi]` (endpoints included, clustered
    /// toward them), the default for detector grids.
    pub fn chebyshev(lo: f64, hi: f64, n: usize, tolerance: f64) -> Result<Grid> {
        Self::validate(lo, hi, n, tolerance)?;
        let mid = 0.5 * (lo + hi);
        let half = 0.5 * (hi - lo);
        let points = (0..n)
            .map(|k| {
                let theta = std::f64::consts::PI * k as f64 / (n - 1) as f64;
                (mid - half * theta.cos()).clamp(lo, hi)
            })
            .collect();
        Ok(Grid { points, tolerance })
    }

    /// Uniformly spaced points on `[lo, hi]`, endpoints included.
    pub fn uniform(lo: f64, hi: f64, n: usize, tolerance: f64) -> Result<Grid> {
        Self::validate(lo, hi, n, tolerance)?;
        let h = (hi - lo) / (n - 1) as f64;
        let points = (0..n).map(|k| (lo + h * k as f64).clamp(lo, hi)).collect();
        Ok(Grid { points, tolerance })
    }

    /// The default detector grid for a domain: 256 Chebyshev points, tolerance 1e-8.
    pub fn default_for(domain: (f64, f64)) -> Result<Grid> {
        Self::chebyshev(domain.0, domain.1, Self::DEFAULT_POINTS, Self::DEFAULT_TOLERANCE)
    }

    fn validate(lo: f64, hi: f64, n: usize, tolerance: f64) -> Result<()> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::Invalid(format!("bad grid interval [{lo}, {hi}]")));
        }
        if n < Self::MIN_POINTS {
            return Err(Error::Invalid(format!(
                "grid needs at least {} points, got {n}",
                Self::MIN_POINTS
            )));
        }
        if !(tolerance > 0.0 && tolerance.is_finite()) {
            return Err(Error::Invalid(format!("bad grid tolerance {tolerance}")));
        }
        Ok(())
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn span(&self) -> (f64, f64) {
        (self.points[0], *self.points.last().unwrap())
    }

    /// True when every grid point lies inside `domain`.
    pub fn inside(&self, domain: (f64, f64)) -> bool {
        let (lo, hi) = self.span();
        domain.0 <= lo && hi <= domain.1
    }
}
