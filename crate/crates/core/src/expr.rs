//! Expression trees over `x1..xn` and their evaluation.
//!
//! Grammar (whitespace-insensitive):
//!
//! ```text
//! sum     := product (('+' | '-') product)*
//! product := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := atom ('^' integer)?
//! atom    := number | 'x' index | ('sqrt' | 'abs') '(' sum ')' | '(' sum ')'
//! ```
//!
//! Column numbers in syntax errors are 1-based character positions.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::dual::{Dual1, Dual2};
use crate::error::{Error, Result};
use crate::interval::{Interval, IntervalMatrix, IntervalVector};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    /// Zero-based variable index; `x1` is `Var(0)`.
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, u32),
    Sqrt(Box<Expr>),
    Abs(Box<Expr>),
}

impl Expr {
    pub fn eval<S: Scalar>(&self, x: &[S]) -> Result<S> {
        Ok(match self {
            Expr::Const(c) => S::cst(*c),
            Expr::Var(i) => x
                .get(*i)
                .cloned()
                .ok_or(Error::DimensionMismatch { expected: i + 1, got: x.len() })?,
            Expr::Neg(a) => a.eval(x)?.neg(),
            Expr::Add(a, b) => a.eval(x)?.add(&b.eval(x)?),
            Expr::Sub(a, b) => a.eval(x)?.sub(&b.eval(x)?),
            Expr::Mul(a, b) => a.eval(x)?.mul(&b.eval(x)?),
            Expr::Div(a, b) => a.eval(x)?.div(&b.eval(x)?)?,
            Expr::Pow(a, k) => a.eval(x)?.powi(*k),
            Expr::Sqrt(a) => a.eval(x)?.sqrt()?,
            Expr::Abs(a) => a.eval(x)?.abs()?,
        })
    }

    /// Largest variable index plus one (0 for constant expressions).
    pub fn arity(&self) -> usize {
        match self {
            Expr::Const(_) => 0,
            Expr::Var(i) => i + 1,
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Sqrt(a) | Expr::Abs(a) => a.arity(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.arity().max(b.arity())
            }
        }
    }

    pub fn contains_abs(&self) -> bool {
        match self {
            Expr::Abs(_) => true,
            Expr::Const(_) | Expr::Var(_) => false,
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Sqrt(a) => a.contains_abs(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.contains_abs() || b.contains_abs()
            }
        }
    }

    /// Substitute `x_i -> x_i + offset[i]`, moving a point `offset` to the origin.
    pub fn shift_vars(&self, offset: &[f64]) -> Expr {
        let bx = |e: &Expr| Box::new(e.shift_vars(offset));
        match self {
            Expr::Const(c) => Expr::Const(*c),
            Expr::Var(i) => match offset.get(*i) {
                Some(&o) if o != 0.0 => Expr::Add(Box::new(Expr::Var(*i)), Box::new(Expr::Const(o))),
                _ => Expr::Var(*i),
            },
            Expr::Neg(a) => Expr::Neg(bx(a)),
            Expr::Add(a, b) => Expr::Add(bx(a), bx(b)),
            Expr::Sub(a, b) => Expr::Sub(bx(a), bx(b)),
            Expr::Mul(a, b) => Expr::Mul(bx(a), bx(b)),
            Expr::Div(a, b) => Expr::Div(bx(a), bx(b)),
            Expr::Pow(a, k) => Expr::Pow(bx(a), *k),
            Expr::Sqrt(a) => Expr::Sqrt(bx(a)),
            Expr::Abs(a) => Expr::Abs(bx(a)),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(_) => 3,
            Expr::Pow(..) => 4,
            Expr::Const(c) if c.is_sign_negative() => 3,
            _ => 5,
        }
    }
}

fn write_operand(f: &mut fmt::Formatter<'_>, e: &Expr, min_prec: u8) -> fmt::Result {
    if e.precedence() < min_prec {
        write!(f, "({})", e)
    } else {
        write!(f, "{}", e)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => {
                if c.is_sign_negative() {
                    write!(f, "-{:?}", -c)
                } else {
                    write!(f, "{:?}", c)
                }
            }
            Expr::Var(i) => write!(f, "x{}", i + 1),
            Expr::Neg(a) => {
                f.write_str("-")?;
                write_operand(f, a, 3)
            }
            Expr::Add(a, b) | Expr::Sub(a, b) => {
                write_operand(f, a, 1)?;
                f.write_str(if matches!(self, Expr::Add(..)) { " + " } else { " - " })?;
                write_operand(f, b, 2)
            }
            Expr::Mul(a, b) | Expr::Div(a, b) => {
                write_operand(f, a, 2)?;
                f.write_str(if matches!(self, Expr::Mul(..)) { "*" } else { "/" })?;
                write_operand(f, b, 3)
            }
            Expr::Pow(a, k) => {
                write_operand(f, a, 5)?;
                write!(f, "^{}", k)
            }
            Expr::Sqrt(a) => write!(f, "sqrt({})", a),
            Expr::Abs(a) => write!(f, "abs({})", a),
        }
    }
}

struct Parser {
    chars: Vec<char>,
    pos: usize,
    dim: usize,
    open: Vec<usize>,
}

fn syntax(column: usize, message: &str) -> Error {
    Error::Syntax {
        column,
        message: message.to_string(),
    }
}

impl Parser {
    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].is_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).copied()
    }

    fn column(&self) -> usize {
        self.pos + 1
    }

    fn sum(&mut self) -> Result<Expr> {
        let mut lhs = self.product()?;
        while let Some(c @ ('+' | '-')) = self.peek() {
            self.pos += 1;
            let rhs = self.product()?;
            lhs = if c == '+' {
                Expr::Add(Box::new(lhs), Box::new(rhs))
            } else {
                Expr::Sub(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn product(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        while let Some(c @ ('*' | '/')) = self.peek() {
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = if c == '*' {
                Expr::Mul(Box::new(lhs), Box::new(rhs))
            } else {
                Expr::Div(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.peek() == Some('-') {
            self.pos += 1;
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        if self.peek() == Some('+') {
            self.pos += 1;
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.peek() == Some('^') {
            self.pos += 1;
            self.skip_ws();
            let start = self.pos;
            while self.pos < self.chars.len() && self.chars[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            if start == self.pos {
                return Err(syntax(start + 1, "exponent must be a non-negative integer literal"));
            }
            let text: String = self.chars[start..self.pos].iter().collect();
            let k = text
                .parse::<u32>()
                .map_err(|_| syntax(start + 1, "exponent out of range"))?;
            return Ok(Expr::Pow(Box::new(base), k));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        let col = {
            self.skip_ws();
            self.column()
        };
        match self.peek() {
            None => match self.open.last() {
                Some(&c) => Err(syntax(c, "unclosed parenthesis")),
                None => Err(syntax(col, "unexpected end of input")),
            },
            Some('(') => {
                self.pos += 1;
                self.open.push(col);
                let inner = self.sum()?;
                self.expect_close(col)?;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == '.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self.pos < self.chars.len() && self.chars[self.pos].is_ascii_alphanumeric() {
                    self.pos += 1;
                }
                let word: String = self.chars[start..self.pos].iter().collect();
                match word.as_str() {
                    "sqrt" | "abs" => {
                        let open = {
                            self.skip_ws();
                            self.column()
                        };
                        if self.peek() != Some('(') {
                            return Err(syntax(open, "expected '(' after function name"));
                        }
                        self.pos += 1;
                        self.open.push(open);
                        let arg = self.sum()?;
                        self.expect_close(open)?;
                        Ok(if word == "sqrt" {
                            Expr::Sqrt(Box::new(arg))
                        } else {
                            Expr::Abs(Box::new(arg))
                        })
                    }
                    _ => {
                        let idx = word
                            .strip_prefix('x')
                            .filter(|d| !d.is_empty() && d.chars().all(|c| c.is_ascii_digit()))
                            .and_then(|d| d.parse::<usize>().ok())
                            .filter(|&k| k >= 1 && k <= self.dim);
                        match idx {
                            Some(k) => Ok(Expr::Var(k - 1)),
                            None => Err(Error::UnknownVariable(word)),
                        }
                    }
                }
            }
            Some(c) => Err(syntax(col, &format!("unexpected character '{}'", c))),
        }
    }

    fn expect_close(&mut self, open_col: usize) -> Result<()> {
        match self.peek() {
            Some(')') => {
                self.pos += 1;
                self.open.pop();
                Ok(())
            }
            None => Err(syntax(open_col, "unclosed parenthesis")),
            Some(c) => Err(syntax(self.column(), &format!("expected ')' but found '{}'", c))),
        }
    }

    fn number(&mut self) -> Result<Expr> {
        let start = self.pos;
        let n = self.chars.len();
        while self.pos < n && (self.chars[self.pos].is_ascii_digit() || self.chars[self.pos] == '.') {
            self.pos += 1;
        }
        if self.pos < n && matches!(self.chars[self.pos], 'e' | 'E') {
            let mut p = self.pos + 1;
            if p < n && matches!(self.chars[p], '+' | '-') {
                p += 1;
            }
            if p < n && self.chars[p].is_ascii_digit() {
                while p < n && self.chars[p].is_ascii_digit() {
                    p += 1;
                }
                self.pos = p;
            }
        }
        let text: String = self.chars[start..self.pos].iter().collect();
        text.parse::<f64>()
            .map(Expr::Const)
            .map_err(|_| syntax(start + 1, "malformed number"))
    }
}

/// Parse `text` as an expression in variables `x1..x{dim}`.
pub fn parse_expr(text: &str, dim: usize) -> Result<Expr> {
    let mut p = Parser {
        chars: text.chars().collect(),
        pos: 0,
        dim,
        open: Vec::new(),
    };
    let e = p.sum()?;
    match p.peek() {
        None => Ok(e),
        Some(')') => Err(syntax(p.column(), "unmatched ')'")),
        Some(c) => Err(syntax(p.column(), &format!("unexpected character '{}'", c))),
    }
}

pub fn eval_real(f: &Expr, x: &[f64]) -> Result<f64> {
    f.eval(x)
}

pub fn eval_interval(f: &Expr, x: &IntervalVector) -> Result<Interval> {
    f.eval(&x.0)
}

/// Value and gradient at a point.
pub fn eval_grad(f: &Expr, x: &[f64]) -> Result<(f64, Vec<f64>)> {
    let n = x.len();
    let vars: Vec<Dual1<f64>> = x.iter().enumerate().map(|(i, &v)| Dual1::var(v, i, n)).collect();
    let r = f.eval(&vars)?;
    Ok((r.v, r.grad(n)))
}

/// Enclosures of value, gradient and Hessian over a box.
pub fn eval_hess_interval(f: &Expr, x: &IntervalVector) -> Result<(Interval, IntervalVector, IntervalMatrix)> {
    let n = x.len();
    let vars: Vec<Dual2<Interval>> = x.iter().enumerate().map(|(i, &v)| Dual2::var(v, i, n)).collect();
    let r = f.eval(&vars)?;
    let h = IntervalMatrix::from_vec(n, n, r.hess(n))?;
    Ok((r.v, IntervalVector(r.grad(n)), h))
}

/// A map `R^n -> R^m` given componentwise.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub dim_in: usize,
    pub components: Vec<Expr>,
}

impl VectorField {
    pub fn new(dim_in: usize, components: Vec<Expr>) -> Result<Self> {
        for c in &components {
            if c.arity() > dim_in {
                return Err(Error::DimensionMismatch {
                    expected: dim_in,
                    got: c.arity(),
                });
            }
        }
        Ok(VectorField { dim_in, components })
    }

    pub fn parse(texts: &[&str], dim_in: usize) -> Result<Self> {
        let comps = texts.iter().map(|t| parse_expr(t, dim_in)).collect::<Result<Vec<_>>>()?;
        VectorField::new(dim_in, comps)
    }

    pub fn dim_out(&self) -> usize {
        self.components.len()
    }

    pub fn eval<S: Scalar>(&self, x: &[S]) -> Result<Vec<S>> {
        if x.len() != self.dim_in {
            return Err(Error::DimensionMismatch {
                expected: self.dim_in,
                got: x.len(),
            });
        }
        self.components.iter().map(|c| c.eval(x)).collect()
    }

    /// `x + h * f(x)`.
    pub fn euler(&self, h: f64) -> VectorField {
        let components = self
            .components
            .iter()
            .enumerate()
            .map(|(i, c)| {
                Expr::Add(
                    Box::new(Expr::Var(i)),
                    Box::new(Expr::Mul(Box::new(Expr::Const(h)), Box::new(c.clone()))),
                )
            })
            .collect();
        VectorField {
            dim_in: self.dim_in,
            components,
        }
    }

    /// Field in shifted coordinates `y = x - x0`: `y -> f(y + x0) - x0`.
    pub fn translate(&self, x0: &[f64], subtract_offset: bool) -> VectorField {
        let components = self
            .components
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let shifted = c.shift_vars(x0);
                match x0.get(i) {
                    Some(&o) if subtract_offset && o != 0.0 => {
                        Expr::Sub(Box::new(shifted), Box::new(Expr::Const(o)))
                    }
                    _ => shifted,
                }
            })
            .collect();
        VectorField {
            dim_in: self.dim_in,
            components,
        }
    }

    /// Jacobian at a point, row-major `m x n`.
    pub fn jacobian(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(self.dim_out() * self.dim_in);
        for c in &self.components {
            out.extend(eval_grad(c, x)?.1);
        }
        Ok(out)
    }

    pub fn contains_abs(&self) -> bool {
        self.components.iter().any(Expr::contains_abs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str, n: usize) -> Expr {
        parse_expr(s, n).unwrap()
    }

    #[test]
    fn parses_with_standard_precedence() {
        assert_eq!(eval_real(&p("0.5*x1 + x1*x2", 2), &[1.0, 0.0]).unwrap(), 0.5);
        assert_eq!(eval_real(&p("x1^2 - x2^2", 2), &[1.0, 1.0]).unwrap(), 0.0);
        assert_eq!(eval_real(&p("-x1^2", 1), &[3.0]).unwrap(), -9.0);
        assert_eq!(eval_real(&p("2 - 3 - 4", 0), &[]).unwrap(), -5.0);
        assert_eq!(eval_real(&p("8/4/2", 0), &[]).unwrap(), 1.0);
        assert_eq!(eval_real(&p("1.5e1 + 2E-1", 0), &[]).unwrap(), 15.2);
    }

    #[test]
    fn reports_syntax_errors_with_column() {
        match parse_expr("x3*(", 3) {
            Err(Error::Syntax { column, .. }) => assert_eq!(column, 4),
            other => panic!("unexpected {:?}", other),
        }
        assert!(matches!(parse_expr("x1 + ", 1), Err(Error::Syntax { column: 6, .. })));
        assert!(matches!(parse_expr("x1^x2", 2), Err(Error::Syntax { column: 4, .. })));
        assert!(matches!(parse_expr("x1)", 1), Err(Error::Syntax { column: 3, .. })));
        assert_eq!(parse_expr("y + 1", 2), Err(Error::UnknownVariable("y".into())));
        assert_eq!(parse_expr("x3", 2), Err(Error::UnknownVariable("x3".into())));
        assert_eq!(parse_expr("x0", 2), Err(Error::UnknownVariable("x0".into())));
    }

    #[test]
    fn example_field_component() {
        let g = p("-0.8*x2 - x1^2", 2);
        assert_eq!(eval_real(&g, &[1.0, 0.0]).unwrap(), -1.0);
        assert_eq!(eval_real(&p("3.25", 2), &[7.0, 8.0]).unwrap(), 3.25);
        assert_eq!(eval_real(&p("x1/x2", 2), &[1.0, 0.0]), Err(Error::Domain { op: "div" }));
    }

    #[test]
    fn interval_examples() {
        let x = IntervalVector(alloc::vec![Interval::new(-1.0, 2.0).unwrap()]);
        let r = eval_interval(&p("x1^2", 1), &x).unwrap();
        assert_eq!(r.lo(), 0.0);
        assert!(r.hi() >= 4.0 && r.hi() < 4.0 + 1e-12);
        let unit = Interval::new(0.0, 1.0).unwrap();
        let r = eval_interval(&p("x1+x2", 2), &IntervalVector(alloc::vec![unit, unit])).unwrap();
        assert!(r.lo() == 0.0 && r.hi() >= 2.0 && r.hi() < 2.0 + 1e-12);
    }

    #[test]
    fn gradient_examples() {
        let (v, g) = eval_grad(&p("x1^2 + x2^2", 2), &[1.0, 2.0]).unwrap();
        assert_eq!(v, 5.0);
        assert_eq!(g, [2.0, 4.0]);
        let (v, g) = eval_grad(&p("7", 2), &[1.0, 2.0]).unwrap();
        assert_eq!((v, g), (7.0, alloc::vec![0.0, 0.0]));
        assert!(eval_grad(&p("abs(x1)", 1), &[0.0]).is_err());
    }

    #[test]
    fn hessian_examples() {
        let unit = Interval::new(-0.3, 0.7).unwrap();
        let b = IntervalVector(alloc::vec![unit, unit]);
        let (_, _, h) = eval_hess_interval(&p("x1^2 + x2^2", 2), &b).unwrap();
        assert_eq!(h.get(0, 0), Interval::point(2.0));
        assert_eq!(h.get(0, 1), Interval::point(0.0));
        assert_eq!(h.get(1, 1), Interval::point(2.0));
        let (_, _, h) = eval_hess_interval(&p("3*x1 - x2 + 1", 2), &b).unwrap();
        assert!(h.magnitude_upper().iter().all(|&m| m == 0.0));
        let b = IntervalVector(alloc::vec![Interval::new(0.0, 1.0).unwrap()]);
        let (_, _, h) = eval_hess_interval(&p("x1^3", 1), &b).unwrap();
        assert!(h.get(0, 0).lo() <= 0.0 && h.get(0, 0).hi() >= 6.0);
    }

    #[test]
    fn printing_round_trips() {
        for s in [
            "0.5*x1 + x1*x2",
            "-(x1 - x2)^3/(1 + x2)",
            "x1 - (x2 - 3)",
            "sqrt(x1/2 - (x1/2)^2)*abs(-x2)",
            "--x1*-x2",
            "1e-7*x1",
        ] {
            let e = p(s, 2);
            let printed = e.to_string();
            assert_eq!(p(&printed, 2), e, "{} -> {}", s, printed);
        }
    }

    #[test]
    fn shift_moves_point_to_origin() {
        let f = VectorField::parse(&["x1^2 - 1", "x1*x2 - 2"], 2).unwrap();
        let g = f.translate(&[1.0, 2.0], true);
        let y = g.eval(&[0.0, 0.0]).unwrap();
        assert_eq!(y, [-1.0, -2.0]);
        assert_eq!(f.eval(&[1.5, 2.5]).unwrap()[0] - 1.0, g.eval(&[0.5, 0.5]).unwrap()[0]);
    }

    #[test]
    fn euler_and_jacobian() {
        let f = VectorField::parse(&["-x1 + x2^2", "x1*x2"], 2).unwrap();
        let g = f.euler(0.1);
        let j = g.jacobian(&[0.0, 0.0]).unwrap();
        assert!((j[0] - 0.9).abs() < 1e-15 && j[1] == 0.0 && j[2] == 0.0 && j[3] == 1.0);
    }
}
