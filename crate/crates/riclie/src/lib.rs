//! Time-dependent Riccati equations dy/dt = b0(t) + b1(t)·y + b2(t)·y² treated as
//! Lie systems on the projective line.
//!
//! The crate classifies equations by integrability conditions, constructs curves in
//! SL(2,ℝ) that transform them into solvable form, solves the reduced equations by
//! quadrature, and validates every analytic result against an independent numerical
//! oracle that integrates on the compactified real line ℝ ∪ {∞}.
//!
//! Module map:
//!
//! * [`expr`] — scalar expressions of time with forward-mode (dual-number) derivatives,
//!   a text grammar, and evaluation grids;
//! * [`algebra`] — the 2×2 picture: 𝔰𝔩(2) basis, SL(2,ℝ) matrices, Möbius action on
//!   ℝ ∪ {∞}, and time-dependent curves (constant, analytic, tabulated);
//! * [`riccati`] — equations, coefficient transformation under curves, and pushing
//!   solutions through curves;
//! * [`liegroup`] — the matrix linear lifts: the group-path equation Ȧ = a(t)A and the
//!   connecting system between two equations;
//! * [`integrability`] — detectors for solvable structure, reduction plans, and the
//!   named fixture families;
//! * [`solvers`] — quadrature, the incomplete gamma function, linear/autonomous
//!   closed-form solvers, the oracle integrator, and solution traces;
//! * [`cli`] — the command-line front end (JSON jobs in, JSON reports / CSV traces out).

pub mod algebra;
pub mod cli;
pub mod expr;
pub mod integrability;
pub mod liegroup;
pub mod riccati;
pub mod solvers;

pub(crate) mod rk;

use thiserror::Error;

/// Everything that can go wrong, split by who is at fault: the input text, the
/// mathematical preconditions, or the numerics.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Text input that does not parse; `offset` is a byte offset into the source.
    #[error("syntax error at byte {offset}: {msg}")]
    Syntax { offset: usize, msg: String },
    /// An identifier that is neither `t`, a known function, nor a bound parameter.
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdent { name: String, offset: usize },
    /// A parameter name that collides with reserved syntax (`t` or a function name).
    #[error("parameter name `{name}` is reserved")]
    ReservedParam { name: String },
    /// Evaluation outside a function's domain (log of a non-positive value, division
    /// by zero, even root of a negative value, ...).
    #[error("domain error at t = {t}: {what}")]
    Domain { what: String, t: f64 },
    /// Evaluation produced a non-finite value (overflow or an undefined derivative).
    #[error("non-finite value at t = {t} while evaluating {what}")]
    NonFinite { what: String, t: f64 },
    /// More derivative nesting than the dual-number tower supports.
    #[error("derivative nesting deeper than {max} is not supported")]
    DerivTooDeep { max: usize },
    /// A matrix that was required to be in SL(2,ℝ) is not.
    #[error("matrix is not unimodular: det = {det}")]
    NotUnimodular { det: f64 },
    /// A precondition of an operation does not hold; the message names it.
    #[error("precondition violated: {0}")]
    Precondition(String),
    /// Invalid structured input (bad domain, malformed job file, bad grid, ...).
    #[error("invalid input: {0}")]
    Invalid(String),
    /// The adaptive integrator could not continue (step size underflow at `t`).
    #[error("step size underflow at t = {t}{}", detail_suffix(.detail))]
    StepUnderflow { t: f64, detail: String },
    /// Step budget exhausted before reaching the end of the span.
    #[error("integration exceeded {max_steps} steps at t = {t}")]
    StepBudget { t: f64, max_steps: usize },
    /// Adaptive quadrature did not reach the requested tolerance.
    #[error("quadrature did not converge: error estimate {achieved} > requested {requested}")]
    QuadNoConverge { achieved: f64, requested: f64 },
    /// Two traces that must share sample times do not.
    #[error("mismatched traces: {0}")]
    MismatchedTraces(String),
    /// A quantity that must stay away from zero crossed it.
    #[error("{what} crosses zero near t = {t}")]
    ZeroCrossing { what: String, t: f64 },
    /// A claimed particular solution fails its residual check.
    #[error("not a solution: residual {residual} at t = {t} exceeds tolerance {tol}")]
    NotASolution { residual: f64, t: f64, tol: f64 },
    /// Catch-all numerical failure with context.
    #[error("numerical failure: {0}")]
    Numerical(String),
}

fn detail_suffix(detail: &str) -> String {
    if detail.is_empty() {
        String::new()
    } else {
        format!(" ({detail})")
    }
}

impl Error {
    /// Process exit code the CLI maps this error to: 2 for input errors, 3 for
    /// numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Syntax { .. }
            | Error::UnknownIdent { .. }
            | Error::ReservedParam { .. }
            | Error::NotUnimodular { .. }
            | Error::Precondition(_)
            | Error::Invalid(_) => 2,
            Error::Domain { .. }
            | Error::NonFinite { .. }
            | Error::DerivTooDeep { .. }
            | Error::StepUnderflow { .. }
            | Error::StepBudget { .. }
            | Error::QuadNoConverge { .. }
            | Error::MismatchedTraces(_)
            | Error::ZeroCrossing { .. }
            | Error::NotASolution { .. }
            | Error::Numerical(_) => 3,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
