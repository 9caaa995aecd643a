//! Expression tree and its text renderer.

use std::fmt::Write as _;
use std::sync::Arc;

/// Unary elementary functions available in the grammar.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryFn {
    Exp,
    Ln,
    Sqrt,
    Sin,
    Cos,
    Tan,
    Abs,
}

impl UnaryFn {
    pub fn name(self) -> &'static str {
        match self {
            UnaryFn::Exp => "exp",
            UnaryFn::Ln => "ln",
            UnaryFn::Sqrt => "sqrt",
            UnaryFn::Sin => "sin",
            UnaryFn::Cos => "cos",
            UnaryFn::Tan => "tan",
            UnaryFn::Abs => "abs",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "exp" => UnaryFn::Exp,
            "ln" => UnaryFn::Ln,
            "sqrt" => UnaryFn::Sqrt,
            "sin" => UnaryFn::Sin,
            "cos" => UnaryFn::Cos,
            "tan" => UnaryFn::Tan,
            "abs" => UnaryFn::Abs,
            _ => return None,
        })
    }
}

/// Expression node. Parameters are resolved to their numeric value at
/// construction time; the name is kept only for rendering.
#[derive(Debug, Clone, PartialEq)]
pub enum Ast {
    Num(f64),
    Time,
    Param { name: Arc<str>, value: f64 },
    Add(Arc<Ast>, Arc<Ast>),
    Sub(Arc<Ast>, Arc<Ast>),
    Mul(Arc<Ast>, Arc<Ast>),
    Div(Arc<Ast>, Arc<Ast>),
    Neg(Arc<Ast>),
    /// Power with constant exponent.
    Pow(Arc<Ast>, f64),
    Fun(UnaryFn, Arc<Ast>),
    /// Derivative with respect to time, rendered as `D(...)`.
    Deriv(Arc<Ast>),
}

/// Operator precedence used by the renderer; higher binds tighter.
fn prec(ast: &Ast) -> u8 {
    match ast {
        Ast::Add(..) | Ast::Sub(..) => 1,
        Ast::Mul(..) | Ast::Div(..) => 2,
        Ast::Neg(_) => 3,
        Ast::Num(v) if *v < 0.0 => 3,
        Ast::Pow(..) => 4,
        _ => 5,
    }
}

/// Render to text that parses back to a structurally equal tree (given the same
/// parameter bindings).
pub fn render(ast: &Ast) -> String {
    let mut out = String::new();
    render_into(ast, 0, &mut out);
    out
}

fn render_into(ast: &Ast, min_prec: u8, out: &mut String) {
    let p = prec(ast);
    let parens = p < min_prec;
    if parens {
        out.push('(');
    }
    match ast {
        Ast::Num(v) => {
            let _ = write!(out, "{v}");
        }
        Ast::Time => out.push('t'),
        Ast::Param { name, .. } => out.push_str(name),
        Ast::Add(a, b) => {
            render_into(a, 1, out);
            out.push_str(" + ");
            render_into(b, 2, out);
        }
        Ast::Sub(a, b) => {
            render_into(a, 1, out);
            out.push_str(" - ");
            render_into(b, 2, out);
        }
        Ast::Mul(a, b) => {
            render_into(a, 2, out);
            out.push('*');
            render_into(b, 3, out);
        }
        Ast::Div(a, b) => {
            render_into(a, 2, out);
            out.push('/');
            render_into(b, 3, out);
        }
        Ast::Neg(a) => {
            out.push('-');
            render_into(a, 4, out);
        }
        Ast::Pow(base, e) => {
            render_into(base, 5, out);
            let _ = write!(out, "^{e}");
        }
        Ast::Fun(f, a) => {
            out.push_str(f.name());
            out.push('(');
            render_into(a, 0, out);
            out.push(')');
        }
        Ast::Deriv(a) => {
            out.push_str("D(");
            render_into(a, 0, out);
            out.push(')');
        }
    }
    if parens {
        out.push(')');
    }
}
