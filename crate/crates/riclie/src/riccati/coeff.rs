//! Time-dependent coefficients for scalar equations.
//!
//! A coefficient is either a closed-form expression ([`Coeff::Sym`]) or an
//! opaque callable ([`Coeff::Dyn`]) that can report its value and first
//! derivative at a time.  The symbolic variant keeps enough structure for
//! transformations to produce closed-form output; the dynamic variant covers
//! coefficients defined through quadrature or interpolation, where no finite
//! formula exists.

use std::fmt;
use std::sync::Arc;

use crate::expr::Expr;
use crate::Result;

/// A coefficient defined procedurally rather than by a formula.
///
/// Implementors must provide consistent values and first derivatives on the
/// domain they are used over; `describe` supplies a short human-readable form
/// for reports.
pub trait DynCoeff: Send + Sync {
    /// Value at time `t`.
    fn value(&self, t: f64) -> Result<f64>;
    /// First derivative at time `t`.
    fn deriv(&self, t: f64) -> Result<f64>;
    /// Short display form, e.g. `"<quadrature b2>"`.
    fn describe(&self) -> String;
}

/// A scalar time-dependent coefficient.
#[derive(Clone)]
pub enum Coeff {
    /// Closed-form expression in `t`.
    Sym(Expr),
    /// Procedurally defined coefficient.
    Dyn(Arc<dyn DynCoeff>),
}

impl Coeff {
    /// Evaluates the coefficient at `t`.
    pub fn value(&self, t: f64) -> Result<f64> {
        match self {
            Coeff::Sym(e) => e.eval(t),
            Coeff::Dyn(d) => d.value(t),
        }
    }

    /// First derivative at `t`.
    pub fn deriv(&self, t: f64) -> Result<f64> {
        match self {
            Coeff::Sym(e) => e.deriv(t),
            Coeff::Dyn(d) => d.deriv(t),
        }
    }

    /// Value and derivative in one call.
    pub fn jet(&self, t: f64) -> Result<(f64, f64)> {
        Ok((self.value(t)?, self.deriv(t)?))
    }

    /// The underlying expression, when the coefficient is closed-form.
    pub fn expr(&self) -> Option<&Expr> {
        match self {
            Coeff::Sym(e) => Some(e),
            Coeff::Dyn(_) => None,
        }
    }

    /// Human-readable form.
    pub fn describe(&self) -> String {
        match self {
            Coeff::Sym(e) => e.render(),
            Coeff::Dyn(d) => d.describe(),
        }
    }

    /// The coefficient with its sign flipped.
    pub fn negated(&self) -> Coeff {
        match self {
            Coeff::Sym(e) => Coeff::Sym(-e.clone()),
            Coeff::Dyn(_) => self.scaled(-1.0),
        }
    }

    /// The coefficient multiplied by a constant.
    pub fn scaled(&self, k: f64) -> Coeff {
        match self {
            Coeff::Sym(e) => Coeff::Sym(Expr::number(k) * e.clone()),
            Coeff::Dyn(_) => Coeff::Dyn(Arc::new(Scaled {
                k,
                inner: self.clone(),
            })),
        }
    }

    /// The pointwise ratio `self / other`.
    pub fn ratio(&self, other: &Coeff) -> Coeff {
        match (self, other) {
            (Coeff::Sym(n), Coeff::Sym(d)) => Coeff::Sym(n.clone() / d.clone()),
            _ => Coeff::Dyn(Arc::new(Ratio {
                num: self.clone(),
                den: other.clone(),
            })),
        }
    }

    /// A constant coefficient.
    pub fn constant(v: f64) -> Coeff {
        Coeff::Sym(Expr::number(v))
    }
}

impl From<Expr> for Coeff {
    fn from(e: Expr) -> Self {
        Coeff::Sym(e)
    }
}

impl From<f64> for Coeff {
    fn from(v: f64) -> Self {
        Coeff::constant(v)
    }
}

impl fmt::Debug for Coeff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Coeff({})", self.describe())
    }
}

/// Constant multiple of another coefficient.
struct Scaled {
    k: f64,
    inner: Coeff,
}

impl DynCoeff for Scaled {
    fn value(&self, t: f64) -> Result<f64> {
        Ok(self.k * self.inner.value(t)?)
    }

    fn deriv(&self, t: f64) -> Result<f64> {
        Ok(self.k * self.inner.deriv(t)?)
    }

    fn describe(&self) -> String {
        format!("{} * ({})", self.k, self.inner.describe())
    }
}

/// Pointwise quotient of two coefficients.
struct Ratio {
    num: Coeff,
    den: Coeff,
}

impl DynCoeff for Ratio {
    fn value(&self, t: f64) -> Result<f64> {
        let d = self.den.value(t)?;
        if d == 0.0 {
            return Err(crate::Error::Domain {
                what: "division by zero in coefficient ratio".into(),
                t,
            });
        }
        Ok(self.num.value(t)? / d)
    }

    fn deriv(&self, t: f64) -> Result<f64> {
        let (n, dn) = self.num.jet(t)?;
        let (d, dd) = self.den.jet(t)?;
        if d == 0.0 {
            return Err(crate::Error::Domain {
                what: "division by zero in coefficient ratio".into(),
                t,
            });
        }
        Ok((dn * d - n * dd) / (d * d))
    }

    fn describe(&self) -> String {
        format!("({}) / ({})", self.num.describe(), self.den.describe())
    }
}
