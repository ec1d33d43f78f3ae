//! Expression DSL for metric coefficient functions.
//!
//! The language covers numeric literals, variables `x1..xn` (plus a bare `x`
//! in one-dimensional contexts), `+ - * /`, integer powers `^`, unary minus,
//! and the calls `sin cos exp ln sqrt arctan`. Precedence is
//! `^` > unary `-` > `* /` > `+ -`; same-precedence binaries associate left,
//! `^` associates right. There is no implicit multiplication and exponents
//! must be integers.
//!
//! Parsing is a hand-rolled recursive descent over a token stream; the
//! grammar is LL(1) after precedence climbing. The printer emits exactly the
//! parentheses the structure requires, so `parse(print(e))` reproduces the
//! tree for any parser-reachable expression (the parser never produces a
//! negative literal; unary minus stays an explicit node).

use std::fmt;

use crate::error::{Error, Result};
use crate::jet::Jet;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Ln,
    Sqrt,
    Arctan,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sqrt => "sqrt",
            Func::Arctan => "arctan",
        }
    }

    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "ln" => Func::Ln,
            "sqrt" => Func::Sqrt,
            "arctan" => Func::Arctan,
            _ => return None,
        })
    }
}

/// Abstract syntax tree of a coefficient function.
///
/// Variables are stored zero-based; the surface syntax `x3` is `Var(2)`.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Number(f64),
    Var(usize),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
    Call(Func, Box<Expr>),
}

impl Expr {
    /// Parse `src` against a declared dimension. Variable references beyond
    /// the dimension are rejected.
    pub fn parse(src: &str, dim: usize) -> Result<Expr> {
        let tokens = tokenize(src)?;
        let mut parser = Parser {
            tokens: &tokens,
            pos: 0,
            dim,
            src_len: src.len(),
        };
        let expr = parser.expression()?;
        match parser.peek() {
            None => Ok(expr),
            Some(tok) => Err(Error::Parse {
                offset: tok.offset,
                message: format!("unexpected {}", tok.kind.describe()),
            }),
        }
    }

    /// Evaluate over jets by structural recursion; `point[i]` carries the
    /// value and seed of variable `i`.
    pub fn eval_jet(&self, point: &[Jet]) -> Result<Jet> {
        match self {
            Expr::Number(v) => {
                let probe = point.first().expect("evaluation needs at least one variable");
                Ok(Jet::constant(probe.nvars(), probe.degree(), *v))
            }
            Expr::Var(i) => match point.get(*i) {
                Some(jet) => Ok(jet.clone()),
                None => Err(Error::Dimension {
                    index: *i + 1,
                    dim: point.len(),
                }),
            },
            Expr::Neg(e) => Ok(-e.eval_jet(point)?),
            Expr::Binary(op, l, r) => {
                let a = l.eval_jet(point)?;
                let b = r.eval_jet(point)?;
                match op {
                    BinOp::Add => a.checked_add(&b),
                    BinOp::Sub => a.checked_sub(&b),
                    BinOp::Mul => a.checked_mul(&b),
                    BinOp::Div => a.checked_div(&b),
                }
            }
            Expr::Pow(e, k) => e.eval_jet(point)?.powi(*k),
            Expr::Call(func, e) => {
                let a = e.eval_jet(point)?;
                match func {
                    Func::Sin => a.sin(),
                    Func::Cos => a.cos(),
                    Func::Exp => a.exp(),
                    Func::Ln => a.ln(),
                    Func::Sqrt => a.sqrt(),
                    Func::Arctan => a.atan(),
                }
            }
        }
    }

    /// Plain floating evaluation with the same domain rules as the jet path.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        match self {
            Expr::Number(v) => Ok(*v),
            Expr::Var(i) => match x.get(*i) {
                Some(v) => Ok(*v),
                None => Err(Error::Dimension {
                    index: *i + 1,
                    dim: x.len(),
                }),
            },
            Expr::Neg(e) => Ok(-e.eval(x)?),
            Expr::Binary(op, l, r) => {
                let a = l.eval(x)?;
                let b = r.eval(x)?;
                Ok(match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b.abs() < 1e-300 {
                            return Err(Error::DivisionByZeroJet);
                        }
                        a / b
                    }
                })
            }
            Expr::Pow(e, k) => Ok(e.eval(x)?.powi(*k)),
            Expr::Call(func, e) => {
                let a = e.eval(x)?;
                Ok(match func {
                    Func::Sin => a.sin(),
                    Func::Cos => a.cos(),
                    Func::Exp => a.exp(),
                    Func::Ln => {
                        if !(a > 0.0) {
                            return Err(Error::Domain {
                                function: "ln",
                                value: a,
                            });
                        }
                        a.ln()
                    }
                    Func::Sqrt => {
                        if !(a > 0.0) {
                            return Err(Error::Domain {
                                function: "sqrt",
                                value: a,
                            });
                        }
                        a.sqrt()
                    }
                    Func::Arctan => a.atan(),
                })
            }
        }
    }

    /// Structural partial derivative with respect to variable `var`, with
    /// just enough constant folding to keep the tree from ballooning.
    pub fn derivative(&self, var: usize) -> Expr {
        match self {
            Expr::Number(_) => Expr::Number(0.0),
            Expr::Var(i) => Expr::Number(if *i == var { 1.0 } else { 0.0 }),
            Expr::Neg(e) => neg(e.derivative(var)),
            Expr::Binary(BinOp::Add, l, r) => add(l.derivative(var), r.derivative(var)),
            Expr::Binary(BinOp::Sub, l, r) => sub(l.derivative(var), r.derivative(var)),
            Expr::Binary(BinOp::Mul, l, r) => add(
                mul(l.derivative(var), (**r).clone()),
                mul((**l).clone(), r.derivative(var)),
            ),
            Expr::Binary(BinOp::Div, l, r) => {
                // (u/v)' = (u'v - uv') / v^2
                let num = sub(
                    mul(l.derivative(var), (**r).clone()),
                    mul((**l).clone(), r.derivative(var)),
                );
                div(num, pow((**r).clone(), 2))
            }
            Expr::Pow(e, k) => {
                if *k == 0 {
                    Expr::Number(0.0)
                } else {
                    mul(
                        mul(Expr::Number(*k as f64), pow((**e).clone(), k - 1)),
                        e.derivative(var),
                    )
                }
            }
            Expr::Call(func, e) => {
                let inner = e.derivative(var);
                let outer = match func {
                    Func::Sin => Expr::Call(Func::Cos, e.clone()),
                    Func::Cos => neg(Expr::Call(Func::Sin, e.clone())),
                    Func::Exp => Expr::Call(Func::Exp, e.clone()),
                    Func::Ln => div(Expr::Number(1.0), (**e).clone()),
                    Func::Sqrt => div(
                        Expr::Number(0.5),
                        Expr::Call(Func::Sqrt, e.clone()),
                    ),
                    Func::Arctan => div(
                        Expr::Number(1.0),
                        add(Expr::Number(1.0), pow((**e).clone(), 2)),
                    ),
                };
                mul(outer, inner)
            }
        }
    }

    /// Largest variable index referenced, if any.
    pub fn max_var(&self) -> Option<usize> {
        match self {
            Expr::Number(_) => None,
            Expr::Var(i) => Some(*i),
            Expr::Neg(e) | Expr::Pow(e, _) | Expr::Call(_, e) => e.max_var(),
            Expr::Binary(_, l, r) => match (l.max_var(), r.max_var()) {
                (Some(a), Some(b)) => Some(a.max(b)),
                (a, b) => a.or(b),
            },
        }
    }
}

// Smart constructors used by `derivative`: fold the zeros and ones the
// product/chain rules generate, nothing more.
fn is_zero(e: &Expr) -> bool {
    matches!(e, Expr::Number(v) if *v == 0.0)
}

fn is_one(e: &Expr) -> bool {
    matches!(e, Expr::Number(v) if *v == 1.0)
}

fn add(a: Expr, b: Expr) -> Expr {
    if is_zero(&a) {
        return b;
    }
    if is_zero(&b) {
        return a;
    }
    Expr::Binary(BinOp::Add, Box::new(a), Box::new(b))
}

fn sub(a: Expr, b: Expr) -> Expr {
    if is_zero(&b) {
        return a;
    }
    if is_zero(&a) {
        return neg(b);
    }
    Expr::Binary(BinOp::Sub, Box::new(a), Box::new(b))
}

fn mul(a: Expr, b: Expr) -> Expr {
    if is_zero(&a) || is_zero(&b) {
        return Expr::Number(0.0);
    }
    if is_one(&a) {
        return b;
    }
    if is_one(&b) {
        return a;
    }
    Expr::Binary(BinOp::Mul, Box::new(a), Box::new(b))
}

fn div(a: Expr, b: Expr) -> Expr {
    if is_zero(&a) {
        return Expr::Number(0.0);
    }
    if is_one(&b) {
        return a;
    }
    Expr::Binary(BinOp::Div, Box::new(a), Box::new(b))
}

fn neg(e: Expr) -> Expr {
    if is_zero(&e) {
        return e;
    }
    Expr::Neg(Box::new(e))
}

fn pow(e: Expr, k: i32) -> Expr {
    match k {
        0 => Expr::Number(1.0),
        1 => e,
        _ => Expr::Pow(Box::new(e), k),
    }
}

// ---------------------------------------------------------------------------
// Printer

const PREC_ADD: u8 = 1;
const PREC_MUL: u8 = 2;
const PREC_NEG: u8 = 3;
const PREC_POW: u8 = 4;
const PREC_ATOM: u8 = 5;

fn precedence(e: &Expr) -> u8 {
    match e {
        Expr::Number(_) | Expr::Var(_) | Expr::Call(..) => PREC_ATOM,
        Expr::Pow(..) => PREC_POW,
        Expr::Neg(_) => PREC_NEG,
        Expr::Binary(BinOp::Mul | BinOp::Div, ..) => PREC_MUL,
        Expr::Binary(BinOp::Add | BinOp::Sub, ..) => PREC_ADD,
    }
}

fn write_prec(e: &Expr, min: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    let p = precedence(e);
    if p < min {
        write!(f, "(")?;
    }
    match e {
        Expr::Number(v) => write!(f, "{v}")?,
        Expr::Var(i) => write!(f, "x{}", i + 1)?,
        Expr::Neg(inner) => {
            write!(f, "-")?;
            write_prec(inner, PREC_NEG, f)?;
        }
        Expr::Binary(op, l, r) => {
            let (sym, level) = match op {
                BinOp::Add => ("+", PREC_ADD),
                BinOp::Sub => ("-", PREC_ADD),
                BinOp::Mul => ("*", PREC_MUL),
                BinOp::Div => ("/", PREC_MUL),
            };
            write_prec(l, level, f)?;
            write!(f, " {sym} ")?;
            // Right operand one level up: keeps left associativity in the
            // round trip.
            write_prec(r, level + 1, f)?;
        }
        Expr::Pow(base, k) => {
            write_prec(base, PREC_ATOM, f)?;
            write!(f, "^{k}")?;
        }
        Expr::Call(func, arg) => {
            write!(f, "{}(", func.name())?;
            write_prec(arg, 0, f)?;
            write!(f, ")")?;
        }
    }
    if p < min {
        write!(f, ")")?;
    }
    Ok(())
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_prec(self, 0, f)
    }
}

// ---------------------------------------------------------------------------
// Tokenizer

#[derive(Debug, Clone, PartialEq)]
enum TokenKind {
    Number { value: f64, integer: bool },
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

impl TokenKind {
    fn describe(&self) -> String {
        match self {
            TokenKind::Number { value, .. } => format!("number `{value}`"),
            TokenKind::Ident(s) => format!("identifier `{s}`"),
            TokenKind::Plus => "`+`".into(),
            TokenKind::Minus => "`-`".into(),
            TokenKind::Star => "`*`".into(),
            TokenKind::Slash => "`/`".into(),
            TokenKind::Caret => "`^`".into(),
            TokenKind::LParen => "`(`".into(),
            TokenKind::RParen => "`)`".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    kind: TokenKind,
    offset: usize,
}

fn tokenize(src: &str) -> Result<Vec<Token>> {
    let bytes = src.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let offset = i;
        match c {
            b' ' | b'\t' | b'\r' | b'\n' => {
                i += 1;
                continue;
            }
            b'+' => tokens.push(Token { kind: TokenKind::Plus, offset }),
            b'-' => tokens.push(Token { kind: TokenKind::Minus, offset }),
            b'*' => tokens.push(Token { kind: TokenKind::Star, offset }),
            b'/' => tokens.push(Token { kind: TokenKind::Slash, offset }),
            b'^' => tokens.push(Token { kind: TokenKind::Caret, offset }),
            b'(' => tokens.push(Token { kind: TokenKind::LParen, offset }),
            b')' => tokens.push(Token { kind: TokenKind::RParen, offset }),
            b'0'..=b'9' | b'.' => {
                let mut j = i;
                let mut integer = true;
                while j < bytes.len() && bytes[j].is_ascii_digit() {
                    j += 1;
                }
                if j < bytes.len() && bytes[j] == b'.' {
                    integer = false;
                    j += 1;
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                }
                if j < bytes.len() && (bytes[j] == b'e' || bytes[j] == b'E') {
                    integer = false;
                    let mut k = j + 1;
                    if k < bytes.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
                        k += 1;
                    }
                    if k < bytes.len() && bytes[k].is_ascii_digit() {
                        j = k;
                        while j < bytes.len() && bytes[j].is_ascii_digit() {
                            j += 1;
                        }
                    }
                }
                let text = &src[i..j];
                let value: f64 = text.parse().map_err(|_| Error::Parse {
                    offset,
                    message: format!("malformed number `{text}`"),
                })?;
                tokens.push(Token {
                    kind: TokenKind::Number { value, integer },
                    offset,
                });
                i = j;
                continue;
            }
            b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                let mut j = i;
                while j < bytes.len()
                    && (bytes[j].is_ascii_alphanumeric() || bytes[j] == b'_')
                {
                    j += 1;
                }
                tokens.push(Token {
                    kind: TokenKind::Ident(src[i..j].to_string()),
                    offset,
                });
                i = j;
                continue;
            }
            _ => {
                return Err(Error::Parse {
                    offset,
                    message: format!("unexpected character `{}`", src[i..].chars().next().unwrap()),
                })
            }
        }
        i += 1;
    }
    Ok(tokens)
}

// ---------------------------------------------------------------------------
// Parser

struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
    dim: usize,
    src_len: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let tok = self.tokens.get(self.pos).cloned();
        if tok.is_some() {
            self.pos += 1;
        }
        tok
    }

    fn eof_error(&self, expected: &str) -> Error {
        Error::Parse {
            offset: self.src_len,
            message: format!("unexpected end of input, expected {expected}"),
        }
    }

    fn expect(&mut self, kind: TokenKind, expected: &str) -> Result<()> {
        match self.next() {
            Some(tok) if tok.kind == kind => Ok(()),
            Some(tok) => Err(Error::Parse {
                offset: tok.offset,
                message: format!("expected {expected}, found {}", tok.kind.describe()),
            }),
            None => Err(self.eof_error(expected)),
        }
    }

    fn expression(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek().map(|t| &t.kind) {
                Some(TokenKind::Plus) => BinOp::Add,
                Some(TokenKind::Minus) => BinOp::Sub,
                _ => break,
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek().map(|t| &t.kind) {
                Some(TokenKind::Star) => BinOp::Mul,
                Some(TokenKind::Slash) => BinOp::Div,
                _ => break,
            };
            self.pos += 1;
            let rhs = self.factor()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<Expr> {
        if matches!(self.peek().map(|t| &t.kind), Some(TokenKind::Minus)) {
            self.pos += 1;
            return Ok(Expr::Neg(Box::new(self.factor()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if matches!(self.peek().map(|t| &t.kind), Some(TokenKind::Caret)) {
            self.pos += 1;
            let k = self.exponent()?;
            return Ok(Expr::Pow(Box::new(base), k));
        }
        Ok(base)
    }

    /// Integer exponent, optionally signed or parenthesized; a trailing `^`
    /// recurses so chains associate to the right.
    fn exponent(&mut self) -> Result<i32> {
        let tok = match self.next() {
            Some(tok) => tok,
            None => return Err(self.eof_error("integer exponent")),
        };
        let base = match tok.kind {
            TokenKind::LParen => {
                let inner = self.exponent()?;
                self.expect(TokenKind::RParen, "`)`")?;
                inner
            }
            TokenKind::Minus => {
                let magnitude = self.integer_literal()?;
                magnitude.checked_neg().ok_or(Error::Parse {
                    offset: tok.offset,
                    message: "exponent out of range".into(),
                })?
            }
            TokenKind::Number { value, integer } => integer_from(value, integer, tok.offset)?,
            other => {
                return Err(Error::Parse {
                    offset: tok.offset,
                    message: format!("expected integer exponent, found {}", other.describe()),
                })
            }
        };
        if matches!(self.peek().map(|t| &t.kind), Some(TokenKind::Caret)) {
            let offset = self.peek().unwrap().offset;
            self.pos += 1;
            let rhs = self.exponent()?;
            if rhs < 0 {
                return Err(Error::Parse {
                    offset,
                    message: "negative exponent in `^` chain".into(),
                });
            }
            return base.checked_pow(rhs as u32).ok_or(Error::Parse {
                offset,
                message: "exponent out of range".into(),
            });
        }
        Ok(base)
    }

    fn integer_literal(&mut self) -> Result<i32> {
        let tok = match self.next() {
            Some(tok) => tok,
            None => return Err(self.eof_error("integer exponent")),
        };
        match tok.kind {
            TokenKind::Number { value, integer } => integer_from(value, integer, tok.offset),
            other => Err(Error::Parse {
                offset: tok.offset,
                message: format!("expected integer exponent, found {}", other.describe()),
            }),
        }
    }

    fn atom(&mut self) -> Result<Expr> {
        let tok = match self.next() {
            Some(tok) => tok,
            None => return Err(self.eof_error("an expression")),
        };
        match tok.kind {
            TokenKind::Number { value, .. } => Ok(Expr::Number(value)),
            TokenKind::LParen => {
                let inner = self.expression()?;
                self.expect(TokenKind::RParen, "`)`")?;
                Ok(inner)
            }
            TokenKind::Ident(name) => self.ident(&name, tok.offset),
            other => Err(Error::Parse {
                offset: tok.offset,
                message: format!("expected an expression, found {}", other.describe()),
            }),
        }
    }

    fn ident(&mut self, name: &str, offset: usize) -> Result<Expr> {
        if let Some(func) = Func::from_name(name) {
            self.expect(TokenKind::LParen, "`(` after function name")?;
            let arg = self.expression()?;
            self.expect(TokenKind::RParen, "`)`")?;
            return Ok(Expr::Call(func, Box::new(arg)));
        }
        if name == "x" {
            if self.dim != 1 {
                return Err(Error::Dimension {
                    index: 1,
                    dim: self.dim,
                });
            }
            return Ok(Expr::Var(0));
        }
        if let Some(digits) = name.strip_prefix('x') {
            if !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()) {
                let index: usize = digits.parse().map_err(|_| Error::Parse {
                    offset,
                    message: format!("variable index `{digits}` out of range"),
                })?;
                if index == 0 || index > self.dim {
                    return Err(Error::Dimension {
                        index,
                        dim: self.dim,
                    });
                }
                return Ok(Expr::Var(index - 1));
            }
        }
        Err(Error::Parse {
            offset,
            message: format!("unknown identifier `{name}`"),
        })
    }
}

fn integer_from(value: f64, integer: bool, offset: usize) -> Result<i32> {
    if !integer {
        return Err(Error::Parse {
            offset,
            message: "exponent must be an integer".into(),
        });
    }
    if value.abs() > i32::MAX as f64 {
        return Err(Error::Parse {
            offset,
            message: "exponent out of range".into(),
        });
    }
    Ok(value as i32)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fd;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn parses_quadratic() {
        let e = Expr::parse("0.5*(x1^2 + x2^2)", 2).unwrap();
        assert_relative_eq!(e.eval(&[3.0, 4.0]).unwrap(), 12.5);
    }

    #[test]
    fn parses_product_of_calls() {
        let e = Expr::parse("sin(x1)*cos(x2)", 2).unwrap();
        match &e {
            Expr::Binary(BinOp::Mul, l, r) => {
                assert!(matches!(**l, Expr::Call(Func::Sin, _)));
                assert!(matches!(**r, Expr::Call(Func::Cos, _)));
            }
            other => panic!("unexpected tree {other:?}"),
        }
    }

    #[test]
    fn rejects_out_of_range_variable() {
        assert!(matches!(
            Expr::parse("x3", 2),
            Err(Error::Dimension { index: 3, dim: 2 })
        ));
        assert!(matches!(
            Expr::parse("x0", 2),
            Err(Error::Dimension { index: 0, dim: 2 })
        ));
    }

    #[test]
    fn bare_x_only_in_one_dimension() {
        assert!(Expr::parse("x + 1", 1).is_ok());
        assert!(matches!(
            Expr::parse("x + 1", 2),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn rejects_fractional_exponent() {
        let err = Expr::parse("x1^0.5", 1).unwrap_err();
        assert!(matches!(err, Error::Parse { .. }), "{err}");
    }

    #[test]
    fn rejects_implicit_multiplication() {
        assert!(Expr::parse("2x1", 1).is_err());
    }

    #[test]
    fn reports_byte_offset() {
        match Expr::parse("1 + $", 1) {
            Err(Error::Parse { offset, .. }) => assert_eq!(offset, 4),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn precedence_and_associativity() {
        // ^ binds tighter than unary minus: -x^2 = -(x^2)
        let e = Expr::parse("-x1^2", 1).unwrap();
        assert_relative_eq!(e.eval(&[3.0]).unwrap(), -9.0);
        // left associativity of subtraction
        let e = Expr::parse("10 - 4 - 3", 1).unwrap();
        assert_relative_eq!(e.eval(&[0.0]).unwrap(), 3.0);
        // right-associative exponent chain: x^2^3 = x^8
        let e = Expr::parse("x1^2^3", 1).unwrap();
        assert_relative_eq!(e.eval(&[2.0]).unwrap(), 256.0);
        // negative exponent
        let e = Expr::parse("x1^-2", 1).unwrap();
        assert_relative_eq!(e.eval(&[2.0]).unwrap(), 0.25);
    }

    #[test]
    fn eval_jet_square() {
        let e = Expr::parse("x1^2", 1).unwrap();
        let x = Jet::variable(1, 2, 0, 3.0);
        let j = e.eval_jet(&[x]).unwrap();
        assert_eq!(j.coeffs(), &[9.0, 6.0, 1.0]);
    }

    #[test]
    fn eval_jet_domain_error() {
        let e = Expr::parse("sqrt(x1)", 1).unwrap();
        let x = Jet::variable(1, 2, 0, -1.0);
        assert!(matches!(e.eval_jet(&[x]), Err(Error::Domain { .. })));
    }

    #[test]
    fn eval_jet_mixed_partial_of_exp() {
        let e = Expr::parse("exp(x1 + x2)", 2).unwrap();
        let x = Jet::variable(2, 2, 0, 0.0);
        let y = Jet::variable(2, 2, 1, 0.0);
        let j = e.eval_jet(&[x, y]).unwrap();
        assert_relative_eq!(j.derivative_value(&[1, 1]).unwrap(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn symbolic_derivative_matches_fd() {
        let e = Expr::parse("sin(x1)*exp(x2) + x1^3/(1 + x2^2)", 2).unwrap();
        let d0 = e.derivative(0);
        let d1 = e.derivative(1);
        let x = [0.37, -0.81];
        let fd0 = fd::central_derivative(|p| e.eval(p).unwrap(), &x, &[1, 0], None);
        let fd1 = fd::central_derivative(|p| e.eval(p).unwrap(), &x, &[0, 1], None);
        assert_relative_eq!(d0.eval(&x).unwrap(), fd0, epsilon = 1e-8);
        assert_relative_eq!(d1.eval(&x).unwrap(), fd1, epsilon = 1e-8);
    }

    // Strategy over parser-reachable trees: literals are non-negative, so
    // unary minus is always an explicit node.
    fn expr_strategy(dim: usize) -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            (0u32..1000, 0u32..100).prop_map(|(a, b)| Expr::Number(a as f64 + b as f64 / 100.0)),
            (0..dim).prop_map(Expr::Var),
        ];
        leaf.prop_recursive(6, 64, 3, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone(), any::<u8>()).prop_map(|(l, r, op)| {
                    let op = match op % 4 {
                        0 => BinOp::Add,
                        1 => BinOp::Sub,
                        2 => BinOp::Mul,
                        _ => BinOp::Div,
                    };
                    Expr::Binary(op, Box::new(l), Box::new(r))
                }),
                inner.clone().prop_map(|e| Expr::Neg(Box::new(e))),
                (inner.clone(), -5i32..6).prop_map(|(e, k)| Expr::Pow(Box::new(e), k)),
                (inner, any::<u8>()).prop_map(|(e, f)| {
                    let func = match f % 6 {
                        0 => Func::Sin,
                        1 => Func::Cos,
                        2 => Func::Exp,
                        3 => Func::Ln,
                        4 => Func::Sqrt,
                        _ => Func::Arctan,
                    };
                    Expr::Call(func, Box::new(e))
                }),
            ]
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn print_parse_roundtrip(e in expr_strategy(3)) {
            let printed = e.to_string();
            let reparsed = Expr::parse(&printed, 3).unwrap();
            prop_assert_eq!(reparsed, e);
        }
    }

    proptest! {
        #[test]
        fn degree_zero_jet_matches_plain_eval(
            a in -0.9f64..0.9,
            b in -0.9f64..0.9,
        ) {
            let e = Expr::parse("exp(x1)*sin(x2) + x1*x2 - x2^3", 2).unwrap();
            let plain = e.eval(&[a, b]).unwrap();
            let jets = [Jet::constant(2, 0, a), Jet::constant(2, 0, b)];
            let jet = e.eval_jet(&jets).unwrap();
            prop_assert!((jet.value() - plain).abs() <= 1e-15 * plain.abs().max(1.0));
        }
    }
}
