//! Scalar Riccati equations with time-dependent coefficients.
//!
//! The central type is [`RiccatiEq`], the equation
//!
//! ```text
//!     dy/dt = b0(t) + b1(t)·y + b2(t)·y²
//! ```
//!
//! on a closed time interval.  Coefficients are [`Coeff`] values — either
//! closed-form expressions or procedural callables — so equations produced by
//! transformations and quadrature constructions share one representation.
//!
//! The module also provides the action of unimodular curves on equations
//! ([`transform`]): substituting `y = (α(t)·y′ + β(t)) / (γ(t)·y′ + δ(t))`
//! into one Riccati equation yields another, and the coefficient rule is
//! implemented both symbolically (when every input has a formula) and
//! procedurally (otherwise).  [`push_solution`] maps solution traces forward
//! through a curve pointwise, which is what makes the rule testable: pushing
//! a numerical solution of `eq` through the curve must solve
//! `transform(eq, curve)`.

mod coeff;
mod transform;

pub use coeff::{Coeff, DynCoeff};
pub use transform::{push_solution, transform};

use crate::algebra::Sl2Elem;
use crate::expr::{Expr, Grid};
use crate::{Error, Result};

use std::collections::BTreeMap;
use std::fmt;

/// Number of probe points used to vet coefficients at construction time.
const PROBE_POINTS: usize = 64;

/// Sign behaviour of a coefficient sampled over the domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignProfile {
    /// Every sample was strictly positive.
    Positive,
    /// Every sample was strictly negative.
    Negative,
    /// Every sample was exactly zero.
    Zero,
    /// Samples changed sign or mixed zeros with nonzeros.
    Mixed,
}

impl SignProfile {
    fn of(samples: &[f64]) -> SignProfile {
        let mut pos = false;
        let mut neg = false;
        let mut zero = false;
        for &v in samples {
            if v > 0.0 {
                pos = true;
            } else if v < 0.0 {
                neg = true;
            } else {
                zero = true;
            }
        }
        match (pos, neg, zero) {
            (true, false, false) => SignProfile::Positive,
            (false, true, false) => SignProfile::Negative,
            (false, false, true) => SignProfile::Zero,
            _ => SignProfile::Mixed,
        }
    }

    /// Whether every sample was nonzero with a single sign.
    pub fn is_nonvanishing(&self) -> bool {
        matches!(self, SignProfile::Positive | SignProfile::Negative)
    }

    /// Whether every sample was exactly zero.
    pub fn is_zero(&self) -> bool {
        matches!(self, SignProfile::Zero)
    }
}

/// A Riccati equation `dy/dt = b0 + b1·y + b2·y²` on a closed interval.
#[derive(Clone)]
pub struct RiccatiEq {
    b: [Coeff; 3],
    domain: (f64, f64),
    profiles: [SignProfile; 3],
}

impl RiccatiEq {
    /// Builds an equation from three coefficients on `domain = (lo, hi)`.
    ///
    /// The coefficients are probed on a Chebyshev grid over the domain; any
    /// evaluation failure or non-finite value is reported as a construction
    /// error, and the sampled sign profiles are retained for classification.
    pub fn new(
        b0: impl Into<Coeff>,
        b1: impl Into<Coeff>,
        b2: impl Into<Coeff>,
        domain: (f64, f64),
    ) -> Result<Self> {
        let b = [b0.into(), b1.into(), b2.into()];
        if !(domain.0.is_finite() && domain.1.is_finite()) || domain.0 >= domain.1 {
            return Err(Error::Invalid(format!(
                "domain must be a finite interval with lo < hi, got [{}, {}]",
                domain.0, domain.1
            )));
        }
        let grid = Grid::chebyshev(domain.0, domain.1, PROBE_POINTS, 1e-8)?;
        let mut profiles = [SignProfile::Zero; 3];
        for (i, c) in b.iter().enumerate() {
            let mut samples = Vec::with_capacity(PROBE_POINTS);
            for &t in grid.points() {
                let v = c.value(t)?;
                if !v.is_finite() {
                    return Err(Error::NonFinite {
                        what: format!("coefficient b{i} = {}", c.describe()),
                        t,
                    });
                }
                samples.push(v);
            }
            profiles[i] = SignProfile::of(&samples);
        }
        Ok(RiccatiEq {
            b,
            domain,
            profiles,
        })
    }

    /// Parses three coefficient sources into an equation.
    ///
    /// `params` supplies named constants usable in all three formulas.
    pub fn parse(
        b0: &str,
        b1: &str,
        b2: &str,
        params: &BTreeMap<String, f64>,
        domain: (f64, f64),
    ) -> Result<Self> {
        RiccatiEq::new(
            Expr::parse(b0, params)?,
            Expr::parse(b1, params)?,
            Expr::parse(b2, params)?,
            domain,
        )
    }

    /// The three coefficients `[b0, b1, b2]`.
    pub fn b(&self) -> &[Coeff; 3] {
        &self.b
    }

    /// Free coefficient `b0`.
    pub fn b0(&self) -> &Coeff {
        &self.b[0]
    }

    /// Linear coefficient `b1`.
    pub fn b1(&self) -> &Coeff {
        &self.b[1]
    }

    /// Quadratic coefficient `b2`.
    pub fn b2(&self) -> &Coeff {
        &self.b[2]
    }

    /// The time interval the equation is defined on.
    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    /// Sampled sign profiles of `[b0, b1, b2]` over the domain.
    pub fn profiles(&self) -> &[SignProfile; 3] {
        &self.profiles
    }

    /// Right-hand side `b0 + b1·y + b2·y²` at `(t, y)`.
    pub fn rhs(&self, t: f64, y: f64) -> Result<f64> {
        let b0 = self.b[0].value(t)?;
        let b1 = self.b[1].value(t)?;
        let b2 = self.b[2].value(t)?;
        Ok(b0 + y * (b1 + y * b2))
    }

    /// The equation satisfied by the inverted variable `w = -1/y`.
    ///
    /// Its coefficient vector is `(b2, -b1, b0)`, so a trajectory of `self`
    /// passing through a pole corresponds to a trajectory of the inverted
    /// equation passing through zero.
    pub fn inverted(&self) -> RiccatiEq {
        RiccatiEq {
            b: [
                self.b[2].clone(),
                self.b[1].negated(),
                self.b[0].clone(),
            ],
            domain: self.domain,
            profiles: [self.profiles[2], self.profiles[1], self.profiles[0]],
        }
    }

    /// The 2×2 matrix `a(t)` whose fundamental flow reproduces solutions.
    ///
    /// Row-major `[b1/2, b0, -b2, -b1/2]`: solving `Ȧ = a(t)·A, A(0)=I` and
    /// acting on the initial value by the associated linear-fractional map
    /// recovers `y(t)`.
    pub fn derived_matrix(&self, t: f64) -> Result<[f64; 4]> {
        let b0 = self.b[0].value(t)?;
        let b1 = self.b[1].value(t)?;
        let b2 = self.b[2].value(t)?;
        Ok([b1 / 2.0, b0, -b2, -b1 / 2.0])
    }

    /// The equation's right-hand side as a curve in the traceless algebra.
    ///
    /// Coordinates `(c0, c1, c2) = (b0(t), b1(t), b2(t))` with respect to the
    /// standard basis, i.e. the vector field the equation realises at `t`.
    pub fn algebra_element(&self, t: f64) -> Result<Sl2Elem> {
        Ok(Sl2Elem::new(
            self.b[0].value(t)?,
            self.b[1].value(t)?,
            self.b[2].value(t)?,
        ))
    }

    /// Checks that `span` lies inside the equation's domain.
    pub fn check_span(&self, span: (f64, f64)) -> Result<()> {
        let (lo, hi) = (span.0.min(span.1), span.0.max(span.1));
        let slack = 1e-9 * (self.domain.1 - self.domain.0).abs().max(1.0);
        if lo < self.domain.0 - slack || hi > self.domain.1 + slack {
            return Err(Error::Precondition(format!(
                "time span [{lo}, {hi}] leaves the equation domain [{}, {}]",
                self.domain.0, self.domain.1
            )));
        }
        Ok(())
    }
}

impl fmt::Debug for RiccatiEq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "RiccatiEq {{ b0: {}, b1: {}, b2: {}, domain: [{}, {}] }}",
            self.b[0].describe(),
            self.b[1].describe(),
            self.b[2].describe(),
            self.domain.0,
            self.domain.1
        )
    }
}

/// A solvable target shape for transformations: `dy/dt = d(t)·(c0 + c1·y + c2·y²)`.
///
/// A time-dependent scale `d` multiplying constant coefficients `c`; the
/// equation separates after the reparametrisation `τ = ∫ d`.
#[derive(Clone)]
pub struct TargetForm {
    /// The common time-dependent factor.
    pub d: Coeff,
    /// Constant coefficient vector `(c0, c1, c2)`.
    pub c: [f64; 3],
}

impl TargetForm {
    /// The target as a concrete equation on `domain`.
    pub fn to_equation(&self, domain: (f64, f64)) -> Result<RiccatiEq> {
        RiccatiEq::new(
            self.d.scaled(self.c[0]),
            self.d.scaled(self.c[1]),
            self.d.scaled(self.c[2]),
            domain,
        )
    }
}

impl fmt::Debug for TargetForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "TargetForm {{ d: {}, c: [{}, {}, {}] }}",
            self.d.describe(),
            self.c[0],
            self.c[1],
            self.c[2]
        )
    }
}
