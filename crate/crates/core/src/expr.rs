//! Recursive-descent parser for weight formulas in the variable `r`.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := ('-' | '+') factor | base ('^' factor)?
//! base   := NUMBER | 'r' | FUNC '(' expr ')' | '(' expr ')'
//! FUNC   := exp | log | sqrt
//! ```
//!
//! Power is right associative and binds tighter than unary minus, so
//! `-r^2` is `-(r^2)`. Evaluation works on dual numbers, which gives the
//! derivative needed when a formula describes a tail rather than a density.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Log,
    Sqrt,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

/// Value and first derivative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual {
    pub v: f64,
    pub d: f64,
}

impl Dual {
    pub fn constant(v: f64) -> Self {
        Dual { v, d: 0.0 }
    }

    pub fn var(v: f64) -> Self {
        Dual { v, d: 1.0 }
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn err<T>(&self, msg: &str) -> Result<T> {
        Err(Error::Parse { pos: self.pos, msg: msg.to_string() })
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(b'+') {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat(b'-') {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.factor()?;
        loop {
            if self.eat(b'*') {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.factor()?));
            } else if self.eat(b'/') {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.factor()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn factor(&mut self) -> Result<Expr> {
        if self.eat(b'-') {
            return Ok(Expr::Neg(Box::new(self.factor()?)));
        }
        if self.eat(b'+') {
            return self.factor();
        }
        let base = self.base()?;
        if self.eat(b'^') {
            Ok(Expr::Pow(Box::new(base), Box::new(self.factor()?)))
        } else {
            Ok(base)
        }
    }

    fn base(&mut self) -> Result<Expr> {
        match self.peek() {
            None => self.err("unexpected end of input"),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(b')') {
                    return self.err("expected ')'");
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphanumeric() {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
                let func = match name {
                    "r" => return Ok(Expr::Var),
                    "exp" => Func::Exp,
                    "log" => Func::Log,
                    "sqrt" => Func::Sqrt,
                    _ => {
                        self.pos = start;
                        return self.err(&format!("unknown identifier '{name}'"));
                    }
                };
                if !self.eat(b'(') {
                    return self.err("expected '(' after function name");
                }
                let arg = self.expr()?;
                if !self.eat(b')') {
                    return self.err("expected ')'");
                }
                Ok(Expr::Call(func, Box::new(arg)))
            }
            Some(_) => self.err("unexpected character"),
        }
    }

    fn number(&mut self) -> Result<Expr> {
        let start = self.pos;
        let s = self.src;
        let digits = |p: &mut usize| {
            while *p < s.len() && s[*p].is_ascii_digit() {
                *p += 1;
            }
        };
        digits(&mut self.pos);
        if self.pos < s.len() && s[self.pos] == b'.' {
            self.pos += 1;
            digits(&mut self.pos);
        }
        if self.pos < s.len() && (s[self.pos] == b'e' || s[self.pos] == b'E') {
            let save = self.pos;
            self.pos += 1;
            if self.pos < s.len() && (s[self.pos] == b'+' || s[self.pos] == b'-') {
                self.pos += 1;
            }
            if self.pos < s.len() && s[self.pos].is_ascii_digit() {
                digits(&mut self.pos);
            } else {
                self.pos = save;
            }
        }
        let text = std::str::from_utf8(&s[start..self.pos]).unwrap();
        match text.parse::<f64>() {
            Ok(v) => Ok(Expr::Num(v)),
            Err(_) => {
                self.pos = start;
                self.err("malformed number")
            }
        }
    }
}

impl Expr {
    pub fn parse(src: &str) -> Result<Expr> {
        let mut p = Parser { src: src.as_bytes(), pos: 0 };
        let e = p.expr()?;
        if p.peek().is_some() {
            return p.err("trailing input");
        }
        Ok(e)
    }

    pub fn eval(&self, r: f64) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::Var => r,
            Expr::Neg(a) => -a.eval(r),
            Expr::Add(a, b) => a.eval(r) + b.eval(r),
            Expr::Sub(a, b) => a.eval(r) - b.eval(r),
            Expr::Mul(a, b) => a.eval(r) * b.eval(r),
            Expr::Div(a, b) => a.eval(r) / b.eval(r),
            Expr::Pow(a, b) => a.eval(r).powf(b.eval(r)),
            Expr::Call(f, a) => {
                let x = a.eval(r);
                match f {
                    Func::Exp => x.exp(),
                    Func::Log => x.ln(),
                    Func::Sqrt => x.sqrt(),
                }
            }
        }
    }

    /// `ln` of the value, pushed through exp, products, quotients and powers so
    /// that quantities like `exp(-1/(1-r))` keep their logarithm after the
    /// value itself underflows.
    pub fn eval_ln(&self, r: f64) -> f64 {
        let v = match self {
            Expr::Call(Func::Exp, a) => a.eval(r),
            Expr::Call(Func::Sqrt, a) => 0.5 * a.eval_ln(r),
            Expr::Mul(a, b) => a.eval_ln(r) + b.eval_ln(r),
            Expr::Div(a, b) => a.eval_ln(r) - b.eval_ln(r),
            Expr::Pow(a, b) => b.eval(r) * a.eval_ln(r),
            _ => return self.eval(r).ln(),
        };
        if v.is_nan() {
            self.eval(r).ln()
        } else {
            v
        }
    }

    /// Value and derivative with respect to `r`.
    pub fn eval_dual(&self, r: f64) -> Dual {
        self.dual(Dual::var(r))
    }

    fn dual(&self, x: Dual) -> Dual {
        match self {
            Expr::Num(v) => Dual::constant(*v),
            Expr::Var => x,
            Expr::Neg(a) => {
                let a = a.dual(x);
                Dual { v: -a.v, d: -a.d }
            }
            Expr::Add(a, b) => {
                let (a, b) = (a.dual(x), b.dual(x));
                Dual { v: a.v + b.v, d: a.d + b.d }
            }
            Expr::Sub(a, b) => {
                let (a, b) = (a.dual(x), b.dual(x));
                Dual { v: a.v - b.v, d: a.d - b.d }
            }
            Expr::Mul(a, b) => {
                let (a, b) = (a.dual(x), b.dual(x));
                Dual { v: a.v * b.v, d: a.d * b.v + a.v * b.d }
            }
            Expr::Div(a, b) => {
                let (a, b) = (a.dual(x), b.dual(x));
                let v = a.v / b.v;
                Dual { v, d: (a.d - v * b.d) / b.v }
            }
            Expr::Pow(a, b) => {
                let (a, b) = (a.dual(x), b.dual(x));
                let v = a.v.powf(b.v);
                let mut d = 0.0;
                if a.d != 0.0 {
                    d += b.v * a.v.powf(b.v - 1.0) * a.d;
                }
                if b.d != 0.0 {
                    d += v * a.v.ln() * b.d;
                }
                Dual { v, d }
            }
            Expr::Call(f, a) => {
                let a = a.dual(x);
                match f {
                    Func::Exp => {
                        let v = a.v.exp();
                        Dual { v, d: v * a.d }
                    }
                    Func::Log => Dual { v: a.v.ln(), d: a.d / a.v },
                    Func::Sqrt => {
                        let v = a.v.sqrt();
                        Dual { v, d: 0.5 * a.d / v }
                    }
                }
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Var => write!(f, "r"),
            Expr::Neg(a) => write!(f, "-({a})"),
            Expr::Add(a, b) => write!(f, "({a}+{b})"),
            Expr::Sub(a, b) => write!(f, "({a}-{b})"),
            Expr::Mul(a, b) => write!(f, "({a}*{b})"),
            Expr::Div(a, b) => write!(f, "({a}/{b})"),
            Expr::Pow(a, b) => write!(f, "({a})^({b})"),
            Expr::Call(func, a) => {
                let name = match func {
                    Func::Exp => "exp",
                    Func::Log => "log",
                    Func::Sqrt => "sqrt",
                };
                write!(f, "{name}({a})")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_domain_survives_underflow() {
        let e = Expr::parse("2*exp(-1/(1-r))").unwrap();
        let u = 0.5f64.powi(20);
        assert_eq!(e.eval(1.0 - u), 0.0);
        assert!((e.eval_ln(1.0 - u) - (2f64.ln() - 1.0 / u)).abs() < 1e-9);
        let e = Expr::parse("(1-r)^2/3").unwrap();
        assert!((e.eval_ln(0.5) - (0.25f64 / 3.0).ln()).abs() < 1e-14);
    }

    #[test]
    fn precedence() {
        let e = Expr::parse("1 + 2*3^2^0.5").unwrap();
        assert!((e.eval(0.0) - (1.0 + 2.0 * 3f64.powf(2f64.sqrt()))).abs() < 1e-14);
        assert_eq!(Expr::parse("-r^2").unwrap().eval(3.0), -9.0);
        assert_eq!(Expr::parse("2-3-4").unwrap().eval(0.0), -5.0);
        assert_eq!(Expr::parse("8/4/2").unwrap().eval(0.0), 1.0);
        assert_eq!(Expr::parse("1.5e1").unwrap().eval(0.0), 15.0);
    }

    #[test]
    fn exponential_weight() {
        let e = Expr::parse("exp(-1/(1-r))/(1-r)^2").unwrap();
        let v = e.eval(0.5);
        assert!((v - (-2f64).exp() / 0.25).abs() < 1e-15);
    }

    #[test]
    fn derivative() {
        let e = Expr::parse("1/log(exp(1)/(1-r))").unwrap();
        let r = 0.3;
        let d = e.eval_dual(r);
        let h = 1e-6;
        let fd = (e.eval(r + h) - e.eval(r - h)) / (2.0 * h);
        assert!((d.d - fd).abs() < 1e-8);
        let p = Expr::parse("(1-r)^2.5 * sqrt(r)").unwrap().eval_dual(0.4);
        let exact = -2.5 * 0.6f64.powf(1.5) * 0.4f64.sqrt() + 0.6f64.powf(2.5) * 0.5 / 0.4f64.sqrt();
        assert!((p.d - exact).abs() < 1e-14);
    }

    #[test]
    fn errors() {
        assert!(matches!(Expr::parse("r +"), Err(Error::Parse { .. })));
        assert!(matches!(Expr::parse("foo(r)"), Err(Error::Parse { pos: 0, .. })));
        assert!(matches!(Expr::parse("(r"), Err(Error::Parse { .. })));
        assert!(matches!(Expr::parse("r r"), Err(Error::Parse { .. })));
    }
}
