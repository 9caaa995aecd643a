//! Scalar arithmetic shared by plain evaluation and forward-mode differentiation.
//!
//! [`Dual<T>`] carries a value and one derivative component; nesting duals gives
//! higher derivatives. The nesting depth is a fixed tower (`f64`, `Dual<f64>`, …)
//! closed off at [`MAX_DERIV_DEPTH`] levels so that generic evaluation code
//! instantiates finitely.

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Maximum supported nesting of derivative evaluation.
pub const MAX_DERIV_DEPTH: usize = 4;

/// Arithmetic and elementary functions over a value-plus-derivatives scalar.
///
/// Domain checking is not done here: callers test the [`value`](Field::value)
/// part before applying a partial function, and check [`all_finite`](Field::all_finite)
/// afterwards.
pub trait Field:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn from_f64(v: f64) -> Self;
    fn zero() -> Self {
        Self::from_f64(0.0)
    }
    fn one() -> Self {
        Self::from_f64(1.0)
    }
    /// The innermost value component, with every derivative stripped.
    fn value(self) -> f64;
    /// True when the value and all derivative components are finite.
    fn all_finite(self) -> bool;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sqrt(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn tan(self) -> Self;
    /// Power with a constant exponent.
    fn powc(self, p: f64) -> Self;
    /// |x| with the right-derivative convention at 0; the flag reports a kink hit.
    fn abs_kink(self) -> (Self, bool);
}

impl Field for f64 {
    fn from_f64(v: f64) -> Self {
        v
    }
    fn value(self) -> f64 {
        self
    }
    fn all_finite(self) -> bool {
        self.is_finite()
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn tan(self) -> Self {
        f64::tan(self)
    }
    fn powc(self, p: f64) -> Self {
        if p == p.trunc() && p.abs() <= i32::MAX as f64 {
            self.powi(p as i32)
        } else {
            self.powf(p)
        }
    }
    fn abs_kink(self) -> (Self, bool) {
        (self.abs(), self == 0.0)
    }
}

/// A value together with one derivative component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual<T> {
    pub re: T,
    pub eps: T,
}

impl<T: Field> Dual<T> {
    pub fn constant(v: T) -> Self {
        Dual { re: v, eps: T::zero() }
    }
    /// The evaluation-point seed: value `v`, derivative 1.
    pub fn seeded(v: T) -> Self {
        Dual { re: v, eps: T::one() }
    }
}

impl<T: Field> Add for Dual<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Dual { re: self.re + o.re, eps: self.eps + o.eps }
    }
}

impl<T: Field> Sub for Dual<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Dual { re: self.re - o.re, eps: self.eps - o.eps }
    }
}

impl<T: Field> Mul for Dual<T> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Dual {
            re: self.re * o.re,
            eps: self.re * o.eps + self.eps * o.re,
        }
    }
}

impl<T: Field> Div for Dual<T> {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        Dual {
            re: self.re / o.re,
            eps: (self.eps * o.re - self.re * o.eps) / (o.re * o.re),
        }
    }
}

impl<T: Field> Neg for Dual<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Dual { re: -self.re, eps: -self.eps }
    }
}

impl<T: Field> Field for Dual<T> {
    fn from_f64(v: f64) -> Self {
        Dual::constant(T::from_f64(v))
    }
    fn value(self) -> f64 {
        self.re.value()
    }
    fn all_finite(self) -> bool {
        self.re.all_finite() && self.eps.all_finite()
    }
    fn exp(self) -> Self {
        let e = self.re.exp();
        Dual { re: e, eps: self.eps * e }
    }
    fn ln(self) -> Self {
        Dual { re: self.re.ln(), eps: self.eps / self.re }
    }
    fn sqrt(self) -> Self {
        let s = self.re.sqrt();
        Dual { re: s, eps: self.eps / (s + s) }
    }
    fn sin(self) -> Self {
        Dual { re: self.re.sin(), eps: self.eps * self.re.cos() }
    }
    fn cos(self) -> Self {
        Dual { re: self.re.cos(), eps: -(self.eps * self.re.sin()) }
    }
    fn tan(self) -> Self {
        let t = self.re.tan();
        Dual { re: t, eps: self.eps * (T::one() + t * t) }
    }
    fn powc(self, p: f64) -> Self {
        if p == 0.0 {
            Dual::constant(T::one())
        } else if p == 1.0 {
            self
        } else {
            Dual {
                re: self.re.powc(p),
                eps: self.eps * self.re.powc(p - 1.0) * T::from_f64(p),
            }
        }
    }
    fn abs_kink(self) -> (Self, bool) {
        let (a, kink) = self.re.abs_kink();
        let sign = if self.re.value() < 0.0 { -1.0 } else { 1.0 };
        (Dual { re: a, eps: self.eps * T::from_f64(sign) }, kink)
    }
}

/// A [`Field`] scalar that knows its place in the dual tower: `Up` is the type
/// used to evaluate one more derivative level on top of it.
pub trait AdScalar: Field {
    type Up: AdScalar;
    /// False on the top floor of the tower, where no further lifting is possible.
    const CAN_LIFT: bool;
    /// Lift the evaluation point one level, seeding d/dt = 1.
    fn lift_seed(self) -> Self::Up;
    /// Project the derivative component back down one level.
    fn eps_of(up: Self::Up) -> Self;
}

macro_rules! ad_level {
    ($ty:ty, $up:ty) => {
        impl AdScalar for $ty {
            type Up = $up;
            const CAN_LIFT: bool = true;
            fn lift_seed(self) -> Self::Up {
                Dual::seeded(self)
            }
            fn eps_of(up: Self::Up) -> Self {
                up.eps
            }
        }
    };
}

type D1 = Dual<f64>;
type D2 = Dual<D1>;
type D3 = Dual<D2>;
type D4 = Dual<D3>;

ad_level!(f64, D1);
ad_level!(D1, D2);
ad_level!(D2, D3);
ad_level!(D3, D4);

impl AdScalar for D4 {
    type Up = D4;
    const CAN_LIFT: bool = false;
    fn lift_seed(self) -> Self::Up {
        unreachable!("dual tower is capped at {MAX_DERIV_DEPTH} levels")
    }
    fn eps_of(up: Self::Up) -> Self {
        up
    }
}
