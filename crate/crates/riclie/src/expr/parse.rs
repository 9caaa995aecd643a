//! Recursive-descent parser for the expression grammar.
//!
//! ```text
//! expr     := term (("+" | "-") term)*
//! term     := unary (("*" | "/") unary)*
//! unary    := "-" unary | power
//! power    := atom ("^" exponent)?
//! exponent := "-"? (number | param-ident)        (constant exponents only)
//! atom     := number | ident | ident "(" expr ")" | "(" expr ")"
//! ```
//!
//! `t` is the time variable; `exp ln sqrt sin cos tan abs` are the elementary
//! functions; `D(...)` is the time derivative; every other identifier must be a
//! bound parameter and is resolved to its value at parse time.

use std::collections::BTreeMap;
use std::sync::Arc;

use super::ast::{Ast, UnaryFn};
use crate::{Error, Result};

/// Names with fixed meaning that parameters may not shadow.
pub const RESERVED: [&str; 9] = ["t", "exp", "ln", "sqrt", "sin", "cos", "tan", "abs", "D"];

pub fn parse(src: &str, params: &BTreeMap<String, f64>) -> Result<Arc<Ast>> {
    for (name, value) in params {
        if RESERVED.contains(&name.as_str()) {
            return Err(Error::ReservedParam { name: name.clone() });
        }
        if !is_ident(name) {
            return Err(Error::Invalid(format!("parameter name `{name}` is not an identifier")));
        }
        if !value.is_finite() {
            return Err(Error::Invalid(format!("parameter `{name}` has non-finite value {value}")));
        }
    }
    let mut p = Parser { src: src.as_bytes(), pos: 0, params };
    p.skip_ws();
    let ast = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.err("unexpected trailing input"));
    }
    Ok(ast)
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    params: &'a BTreeMap<String, f64>,
}

impl<'a> Parser<'a> {
    fn err(&self, msg: &str) -> Error {
        Error::Syntax { offset: self.pos, msg: msg.to_string() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            self.skip_ws();
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Arc<Ast>> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(b'+') {
                lhs = Arc::new(Ast::Add(lhs, self.term()?));
            } else if self.eat(b'-') {
                lhs = Arc::new(Ast::Sub(lhs, self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Arc<Ast>> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat(b'*') {
                lhs = Arc::new(Ast::Mul(lhs, self.unary()?));
            } else if self.eat(b'/') {
                lhs = Arc::new(Ast::Div(lhs, self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Arc<Ast>> {
        if self.eat(b'-') {
            let inner = self.unary()?;
            // Fold a literal directly so `-2*x` and the rendering of negative
            // constants round-trip to the same tree.
            return Ok(match &*inner {
                Ast::Num(v) => Arc::new(Ast::Num(-v)),
                _ => Arc::new(Ast::Neg(inner)),
            });
        }
        self.power()
    }

    fn power(&mut self) -> Result<Arc<Ast>> {
        let base = self.atom()?;
        if self.eat(b'^') {
            let neg = self.eat(b'-');
            let e = self.exponent()?;
            let e = if neg { -e } else { e };
            self.skip_ws();
            return Ok(Arc::new(Ast::Pow(base, e)));
        }
        Ok(base)
    }

    /// A constant exponent: a literal or the name of a bound parameter.
    fn exponent(&mut self) -> Result<f64> {
        match self.peek() {
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                let start = self.pos;
                let name = self.ident();
                match self.params.get(&name) {
                    Some(v) => Ok(*v),
                    None => Err(Error::UnknownIdent { name, offset: start }),
                }
            }
            _ => Err(self.err("expected a constant exponent after `^`")),
        }
    }

    fn atom(&mut self) -> Result<Arc<Ast>> {
        match self.peek() {
            Some(c) if c.is_ascii_digit() || c == b'.' => {
                let v = self.number()?;
                self.skip_ws();
                Ok(Arc::new(Ast::Num(v)))
            }
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                let start = self.pos;
                let name = self.ident();
                self.skip_ws();
                if self.peek() == Some(b'(') {
                    if let Some(f) = UnaryFn::from_name(&name) {
                        self.eat(b'(');
                        let arg = self.expr()?;
                        if !self.eat(b')') {
                            return Err(self.err("expected `)`"));
                        }
                        return Ok(Arc::new(Ast::Fun(f, arg)));
                    }
                    if name == "D" {
                        self.eat(b'(');
                        let arg = self.expr()?;
                        if !self.eat(b')') {
                            return Err(self.err("expected `)`"));
                        }
                        return Ok(Arc::new(Ast::Deriv(arg)));
                    }
                    return Err(Error::UnknownIdent { name, offset: start });
                }
                if name == "t" {
                    return Ok(Arc::new(Ast::Time));
                }
                match self.params.get(&name) {
                    Some(v) => Ok(Arc::new(Ast::Param { name: name.into(), value: *v })),
                    None => Err(Error::UnknownIdent { name, offset: start }),
                }
            }
            Some(b'(') => {
                self.eat(b'(');
                let inner = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.err("expected `)`"));
                }
                Ok(inner)
            }
            _ => Err(self.err("expected a number, identifier, or `(`")),
        }
    }

    fn ident(&mut self) -> String {
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        String::from_utf8_lossy(&self.src[start..self.pos]).into_owned()
    }

    fn number(&mut self) -> Result<f64> {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            self.pos += 1;
        }
        if self.peek() == Some(b'.') {
            self.pos += 1;
            while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                self.pos += 1;
            }
        }
        if matches!(self.peek(), Some(b'e') | Some(b'E')) {
            let mark = self.pos;
            self.pos += 1;
            if matches!(self.peek(), Some(b'+') | Some(b'-')) {
                self.pos += 1;
            }
            if matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                    self.pos += 1;
                }
            } else {
                // `2e` followed by something else: the `e` was not an exponent.
                self.pos = mark;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        text.parse::<f64>().map_err(|_| Error::Syntax {
            offset: start,
            msg: format!("invalid number literal `{text}`"),
        })
    }
}
