//! Exact rational helpers and a small expression language for parametric
//! map coefficients.
//!
//! Expressions are rational functions of the integer parameter `m` with
//! integer powers, e.g. `1/2^(2*m-1)` or `(m+1)/(3^m)`. They are evaluated in
//! arbitrary-precision rational arithmetic.

use std::fmt;

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;

pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// `base^exp` for an integer exponent of either sign.
pub fn pow(base: &Rational, exp: i64) -> Result<Rational> {
    if exp < 0 && base.is_zero() {
        return Err(Error::Expr("zero raised to a negative power".into()));
    }
    let e = u32::try_from(exp.unsigned_abs())
        .map_err(|_| Error::Expr(format!("exponent {exp} too large")))?;
    let p = num::pow::pow(base.clone(), e as usize);
    Ok(if exp < 0 { p.recip() } else { p })
}

/// `3^-n`.
pub fn inv_pow3(n: usize) -> Rational {
    Rational::new(BigInt::one(), num::pow::pow(BigInt::from(3), n))
}

/// Exact value of a finite float.
pub fn from_f64(x: f64) -> Result<Rational> {
    Rational::from_float(x).ok_or(Error::NonFinite)
}

pub fn to_f64(x: &Rational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Parses `"3"`, `"-1/3"`, `"0.25"` or `"1e-3"` exactly.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n = parse_rational(n)?;
        let d = parse_rational(d)?;
        if d.is_zero() {
            return Err(Error::Expr(format!("zero denominator in `{s}`")));
        }
        return Ok(n / d);
    }
    parse_decimal(s).ok_or_else(|| Error::Expr(format!("`{s}` is not a rational literal")))
}

fn parse_decimal(s: &str) -> Option<Rational> {
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i64>().ok()?),
        None => (s, 0),
    };
    let (neg, mantissa) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part
        .chars()
        .chain(frac_part.chars())
        .all(|c| c.is_ascii_digit())
    {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let n: BigInt = if digits.is_empty() {
        BigInt::zero()
    } else {
        digits.parse().ok()?
    };
    let scale = exp - frac_part.len() as i64;
    let v = Rational::from_integer(n) * pow(&int(10), scale).ok()?;
    Some(if neg { -v } else { v })
}

/// Formats as `"p/q"`, or `"p"` for integers.
pub fn fmt_rational(x: &Rational) -> String {
    if x.is_integer() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Const(Rational),
    Param,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn parse(src: &str) -> Result<Expr> {
        let mut p = Parser {
            src: src.as_bytes(),
            pos: 0,
        };
        let e = p.expr()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(Error::Expr(format!(
                "unexpected `{}` at offset {} in `{src}`",
                p.src[p.pos] as char, p.pos
            )));
        }
        Ok(e)
    }

    /// Evaluates at the parameter value `m`.
    pub fn eval(&self, m: i64) -> Result<Rational> {
        Ok(match self {
            Expr::Const(c) => c.clone(),
            Expr::Param => int(m),
            Expr::Neg(a) => -a.eval(m)?,
            Expr::Add(a, b) => a.eval(m)? + b.eval(m)?,
            Expr::Sub(a, b) => a.eval(m)? - b.eval(m)?,
            Expr::Mul(a, b) => a.eval(m)? * b.eval(m)?,
            Expr::Div(a, b) => {
                let d = b.eval(m)?;
                if d.is_zero() {
                    return Err(Error::Expr(format!("division by zero at m={m}")));
                }
                a.eval(m)? / d
            }
            Expr::Pow(a, b) => {
                let e = b.eval(m)?;
                if !e.is_integer() {
                    return Err(Error::Expr(format!(
                        "non-integer exponent {} at m={m}",
                        fmt_rational(&e)
                    )));
                }
                let e = e
                    .to_integer()
                    .to_i64()
                    .ok_or_else(|| Error::Expr("exponent out of range".into()))?;
                pow(&a.eval(m)?, e)?
            }
        })
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => write!(f, "{}", fmt_rational(c)),
            Expr::Param => write!(f, "m"),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Add(a, b) => write!(f, "({a}+{b})"),
            Expr::Sub(a, b) => write!(f, "({a}-{b})"),
            Expr::Mul(a, b) => write!(f, "({a}*{b})"),
            Expr::Div(a, b) => write!(f, "({a}/{b})"),
            Expr::Pow(a, b) => write!(f, "({a}^{b})"),
        }
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        while let Some(op @ (b'+' | b'-')) = self.peek() {
            self.pos += 1;
            let rhs = self.term()?;
            lhs = if op == b'+' {
                Expr::Add(lhs.into(), rhs.into())
            } else {
                Expr::Sub(lhs.into(), rhs.into())
            };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        while let Some(op @ (b'*' | b'/')) = self.peek() {
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = if op == b'*' {
                Expr::Mul(lhs.into(), rhs.into())
            } else {
                Expr::Div(lhs.into(), rhs.into())
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            return Ok(Expr::Neg(self.unary()?.into()));
        }
        self.power()
    }

    // right-associative, binds tighter than unary minus on its left
    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let exp = self.unary()?;
            return Ok(Expr::Pow(base.into(), exp.into()));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(Error::Expr(format!("expected `)` at offset {}", self.pos)));
                }
                self.pos += 1;
                Ok(e)
            }
            Some(b'm') => {
                self.pos += 1;
                Ok(Expr::Param)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => {
                let start = self.pos;
                while self.pos < self.src.len()
                    && (self.src[self.pos].is_ascii_digit() || self.src[self.pos] == b'.')
                {
                    self.pos += 1;
                }
                let lit = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
                Ok(Expr::Const(parse_rational(lit)?))
            }
            Some(c) => Err(Error::Expr(format!(
                "unexpected `{}` at offset {}",
                c as char, self.pos
            ))),
            None => Err(Error::Expr("unexpected end of expression".into())),
        }
    }
}
