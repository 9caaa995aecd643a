//! The 2×2 picture: the compactified real line, SL(2,ℝ) and its Möbius action,
//! the 𝔰𝔩(2) basis used to encode Riccati coefficients, and time-dependent
//! curves of matrices.
//!
//! The action is total on ℝ ∪ {∞}: a matrix (α β; γ δ) sends a finite `y` to
//! (αy+β)/(γy+δ), sends the pole −δ/γ to ∞, and sends ∞ to α/γ (or ∞ when γ = 0).

mod curve;

pub use curve::{AnalyticEntries, HermiteCurve, Sl2Curve};

use crate::{Error, Result};

/// A point of the compactified real line ℝ ∪ {∞} (one point at infinity,
/// projective-line style).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtReal {
    Finite(f64),
    Infinity,
}

impl ExtReal {
    /// Classify an `f64`, folding both signed infinities to the single ∞.
    /// NaN is rejected.
    pub fn from_f64(v: f64) -> Result<ExtReal> {
        if v.is_nan() {
            return Err(Error::Invalid("NaN is not a point of the compactified line".into()));
        }
        if v.is_infinite() {
            return Ok(ExtReal::Infinity);
        }
        Ok(ExtReal::Finite(v))
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            ExtReal::Finite(v) => Some(v),
            ExtReal::Infinity => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, ExtReal::Infinity)
    }

    /// Reciprocal-chart coordinate w = −1/y (with w(∞) = 0).
    pub fn inverted(self) -> ExtReal {
        match self {
            ExtReal::Infinity => ExtReal::Finite(0.0),
            ExtReal::Finite(v) if v == 0.0 => ExtReal::Infinity,
            ExtReal::Finite(v) => {
                let w = -1.0 / v;
                if w.is_finite() {
                    ExtReal::Finite(w)
                } else {
                    ExtReal::Infinity
                }
            }
        }
    }
}

impl std::fmt::Display for ExtReal {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ExtReal::Finite(v) => write!(f, "{v}"),
            ExtReal::Infinity => write!(f, "inf"),
        }
    }
}

/// Angle coordinate θ(y) = 2·atan(y) with θ(∞) = π, used by [`chordal_distance`].
fn theta(y: ExtReal) -> f64 {
    match y {
        ExtReal::Finite(v) => 2.0 * v.atan(),
        ExtReal::Infinity => std::f64::consts::PI,
    }
}

/// Metric on the compactified line: angular distance on the circle that
/// θ(y) = 2·atan(y) wraps the line onto. Bounded by π; well-behaved at poles.
pub fn chordal_distance(a: ExtReal, b: ExtReal) -> f64 {
    let d = (theta(a) - theta(b)).abs();
    d.min(2.0 * std::f64::consts::PI - d)
}

/// Determinant tolerance enforced by [`Sl2::new`].
pub const SL2_DET_TOL: f64 = 1e-9;

/// A matrix in SL(2,ℝ), rows (alpha beta; gamma delta), det = 1 within
/// [`SL2_DET_TOL`] at construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sl2 {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
}

impl Sl2 {
    pub fn new(alpha: f64, beta: f64, gamma: f64, delta: f64) -> Result<Sl2> {
        let m = Sl2 { alpha, beta, gamma, delta };
        if ![alpha, beta, gamma, delta].iter().all(|v| v.is_finite()) {
            return Err(Error::Invalid("matrix entries must be finite".into()));
        }
        let det = m.det();
        if (det - 1.0).abs() > SL2_DET_TOL {
            return Err(Error::NotUnimodular { det });
        }
        Ok(m)
    }

    /// Rescale a positive-determinant matrix onto SL(2,ℝ) by 1/√det.
    pub fn renormalized(alpha: f64, beta: f64, gamma: f64, delta: f64) -> Result<Sl2> {
        let det = alpha * delta - beta * gamma;
        if !det.is_finite() || det <= 0.0 {
            return Err(Error::NotUnimodular { det });
        }
        let s = det.sqrt();
        Ok(Sl2 { alpha: alpha / s, beta: beta / s, gamma: gamma / s, delta: delta / s })
    }

    pub fn identity() -> Sl2 {
        Sl2 { alpha: 1.0, beta: 0.0, gamma: 0.0, delta: 1.0 }
    }

    pub fn det(&self) -> f64 {
        self.alpha * self.delta - self.beta * self.gamma
    }

    /// Exact inverse in SL(2,ℝ): (δ −β; −γ α).
    pub fn inverse(&self) -> Sl2 {
        Sl2 { alpha: self.delta, beta: -self.beta, gamma: -self.gamma, delta: self.alpha }
    }

    pub fn mul(&self, o: &Sl2) -> Sl2 {
        Sl2 {
            alpha: self.alpha * o.alpha + self.beta * o.gamma,
            beta: self.alpha * o.beta + self.beta * o.delta,
            gamma: self.gamma * o.alpha + self.delta * o.gamma,
            delta: self.gamma * o.beta + self.delta * o.delta,
        }
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.alpha, self.beta, self.gamma, self.delta]
    }

    pub fn from_array(m: [f64; 4]) -> Result<Sl2> {
        Sl2::new(m[0], m[1], m[2], m[3])
    }

    /// The Möbius action on the compactified line; total.
    ///
    /// Near the pole the denominator is compared against
    /// `1e-12·(|γ·y| + |δ| + 1)` rather than exact zero.
    pub fn mobius(&self, y: ExtReal) -> ExtReal {
        match y {
            ExtReal::Finite(v) => {
                let den = self.gamma * v + self.delta;
                let guard = 1e-12 * ((self.gamma * v).abs() + self.delta.abs() + 1.0);
                if den.abs() <= guard {
                    return ExtReal::Infinity;
                }
                let r = (self.alpha * v + self.beta) / den;
                if r.is_finite() {
                    ExtReal::Finite(r)
                } else {
                    ExtReal::Infinity
                }
            }
            ExtReal::Infinity => {
                if self.gamma == 0.0 {
                    return ExtReal::Infinity;
                }
                let r = self.alpha / self.gamma;
                if r.is_finite() {
                    ExtReal::Finite(r)
                } else {
                    ExtReal::Infinity
                }
            }
        }
    }
}

/// Möbius action of an arbitrary nonzero-determinant matrix (scale-invariant
/// guard); used internally where matrices are deliberately left unnormalized.
pub(crate) fn mobius_raw(m: &[f64; 4], y: ExtReal) -> ExtReal {
    let [alpha, beta, gamma, delta] = *m;
    match y {
        ExtReal::Finite(v) => {
            let den = gamma * v + delta;
            let guard = 1e-12 * ((gamma * v).abs() + delta.abs());
            if den.abs() <= guard {
                return ExtReal::Infinity;
            }
            let r = (alpha * v + beta) / den;
            if r.is_finite() {
                ExtReal::Finite(r)
            } else {
                ExtReal::Infinity
            }
        }
        ExtReal::Infinity => {
            if gamma == 0.0 {
                return ExtReal::Infinity;
            }
            let r = alpha / gamma;
            if r.is_finite() {
                ExtReal::Finite(r)
            } else {
                ExtReal::Infinity
            }
        }
    }
}

/// An element of 𝔰𝔩(2,ℝ) in the basis used throughout:
///
/// ```text
/// M0 = (0 −1; 0 0)    M1 = ½(−1 0; 0 1)    M2 = (0 0; 1 0)
/// ```
///
/// with commutators \[M0,M1\] = M0, \[M0,M2\] = 2·M1, \[M1,M2\] = M2.
/// Coordinates are (c0, c1, c2) in that basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sl2Elem {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
}

impl Sl2Elem {
    pub fn new(c0: f64, c1: f64, c2: f64) -> Sl2Elem {
        Sl2Elem { c0, c1, c2 }
    }

    pub fn m0() -> Sl2Elem {
        Sl2Elem::new(1.0, 0.0, 0.0)
    }
    pub fn m1() -> Sl2Elem {
        Sl2Elem::new(0.0, 1.0, 0.0)
    }
    pub fn m2() -> Sl2Elem {
        Sl2Elem::new(0.0, 0.0, 1.0)
    }

    /// The matrix c0·M0 + c1·M1 + c2·M2, row-major.
    pub fn to_matrix(&self) -> [f64; 4] {
        [-0.5 * self.c1, -self.c0, self.c2, 0.5 * self.c1]
    }

    /// Coordinates of a traceless matrix. The trace must vanish to within
    /// `1e-12` relative to the entry scale.
    pub fn from_matrix(m: [f64; 4]) -> Result<Sl2Elem> {
        let scale = m.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if (m[0] + m[3]).abs() > 1e-12 * (scale + 1.0) {
            return Err(Error::Invalid(format!(
                "matrix is not traceless: trace = {}",
                m[0] + m[3]
            )));
        }
        Ok(Sl2Elem { c0: -m[1], c1: -2.0 * m[0], c2: m[2] })
    }

    /// Lie bracket \[x, y\] = xy − yx, computed in the matrix picture and read
    /// back in coordinates. Exact on exactly-representable inputs.
    pub fn bracket(&self, o: &Sl2Elem) -> Sl2Elem {
        let a = self.to_matrix();
        let b = o.to_matrix();
        let ab = mat_mul(&a, &b);
        let ba = mat_mul(&b, &a);
        let c = [ab[0] - ba[0], ab[1] - ba[1], ab[2] - ba[2], ab[3] - ba[3]];
        Sl2Elem { c0: -c[1], c1: -2.0 * c[0], c2: c[2] }
    }

    pub fn scale(&self, k: f64) -> Sl2Elem {
        Sl2Elem { c0: k * self.c0, c1: k * self.c1, c2: k * self.c2 }
    }

    pub fn add(&self, o: &Sl2Elem) -> Sl2Elem {
        Sl2Elem { c0: self.c0 + o.c0, c1: self.c1 + o.c1, c2: self.c2 + o.c2 }
    }
}

pub(crate) fn mat_mul(a: &[f64; 4], b: &[f64; 4]) -> [f64; 4] {
    [
        a[0] * b[0] + a[1] * b[2],
        a[0] * b[1] + a[1] * b[3],
        a[2] * b[0] + a[3] * b[2],
        a[2] * b[1] + a[3] * b[3],
    ]
}

#[cfg(test)]
mod tests;
