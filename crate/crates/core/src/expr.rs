//! Rational expressions in the semicircular generators `s1, s2, ...`.
//!
//! Grammar (whitespace-insensitive):
//!
//! ```text
//! sum     := product (("+" | "-") product)*
//! product := unary ("*" unary)*
//! unary   := "-" unary | postfix
//! postfix := atom ("^-1" | "^" digits)*
//! atom    := rational | "s" digits | "(" sum ")"
//! rational:= digits ("/" digits | "." digits)?
//! ```
//!
//! `^k` for a non-negative integer `k` is sugar for a `k`-fold product.

use std::collections::BTreeSet;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_traits::{One, Zero};
use thiserror::Error;

use crate::scalar::{parse_q, Q};
use crate::word::Letter;

#[derive(Debug, Clone, PartialEq)]
pub enum RationalExpr {
    Constant(Q),
    Generator(Letter),
    Sum(Box<RationalExpr>, Box<RationalExpr>),
    Product(Box<RationalExpr>, Box<RationalExpr>),
    Negation(Box<RationalExpr>),
    Inverse(Box<RationalExpr>),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExprParseError {
    #[error("unexpected character {found:?} at offset {pos}")]
    Unexpected { pos: usize, found: char },
    #[error("unexpected end of input")]
    Eof,
    #[error("bad number {0:?}")]
    BadNumber(String),
    #[error("generator index must be 1..=9999, got {0:?}")]
    BadGenerator(String),
}

impl RationalExpr {
    pub fn constant(c: Q) -> Self {
        RationalExpr::Constant(c)
    }

    pub fn int(n: i64) -> Self {
        RationalExpr::Constant(crate::scalar::qi(n))
    }

    /// The generator `s_i`.
    pub fn s(i: u16) -> Self {
        RationalExpr::Generator(Letter::new(i))
    }

    pub fn inv(self) -> Self {
        RationalExpr::Inverse(Box::new(self))
    }

    pub fn pow(self, k: usize) -> Self {
        let mut out = RationalExpr::Constant(Q::one());
        for i in 0..k {
            out = if i == 0 {
                self.clone()
            } else {
                out * self.clone()
            };
        }
        out
    }

    pub fn has_inverse(&self) -> bool {
        match self {
            RationalExpr::Constant(_) | RationalExpr::Generator(_) => false,
            RationalExpr::Sum(a, b) | RationalExpr::Product(a, b) => {
                a.has_inverse() || b.has_inverse()
            }
            RationalExpr::Negation(a) => a.has_inverse(),
            RationalExpr::Inverse(_) => true,
        }
    }

    /// Polynomial degree bound (syntactic), `None` when an inverse occurs.
    pub fn degree(&self) -> Option<usize> {
        match self {
            RationalExpr::Constant(_) => Some(0),
            RationalExpr::Generator(_) => Some(1),
            RationalExpr::Sum(a, b) => Some(a.degree()?.max(b.degree()?)),
            RationalExpr::Product(a, b) => Some(a.degree()? + b.degree()?),
            RationalExpr::Negation(a) => a.degree(),
            RationalExpr::Inverse(_) => None,
        }
    }

    pub fn letters(&self) -> BTreeSet<Letter> {
        let mut out = BTreeSet::new();
        self.collect_letters(&mut out);
        out
    }

    fn collect_letters(&self, out: &mut BTreeSet<Letter>) {
        match self {
            RationalExpr::Constant(_) => {}
            RationalExpr::Generator(l) => {
                out.insert(*l);
            }
            RationalExpr::Sum(a, b) | RationalExpr::Product(a, b) => {
                a.collect_letters(out);
                b.collect_letters(out);
            }
            RationalExpr::Negation(a) | RationalExpr::Inverse(a) => a.collect_letters(out),
        }
    }

    pub fn max_letter(&self) -> u16 {
        self.letters().iter().map(|l| l.index()).max().unwrap_or(0)
    }

    /// Renames generators; used to evaluate on a sub-alphabet.
    pub fn map_letters(&self, f: &impl Fn(Letter) -> Letter) -> RationalExpr {
        match self {
            RationalExpr::Constant(c) => RationalExpr::Constant(c.clone()),
            RationalExpr::Generator(l) => RationalExpr::Generator(f(*l)),
            RationalExpr::Sum(a, b) => {
                RationalExpr::Sum(Box::new(a.map_letters(f)), Box::new(b.map_letters(f)))
            }
            RationalExpr::Product(a, b) => {
                RationalExpr::Product(Box::new(a.map_letters(f)), Box::new(b.map_letters(f)))
            }
            RationalExpr::Negation(a) => RationalExpr::Negation(Box::new(a.map_letters(f))),
            RationalExpr::Inverse(a) => RationalExpr::Inverse(Box::new(a.map_letters(f))),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            RationalExpr::Sum(..) => 1,
            RationalExpr::Product(..) => 2,
            RationalExpr::Negation(..) => 3,
            RationalExpr::Constant(c) if !c.is_integer() || *c < Q::zero() => 2,
            _ => 4,
        }
    }
}

impl fmt::Display for RationalExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn wrap(e: &RationalExpr, min: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            if e.precedence() < min {
                write!(f, "({e})")
            } else {
                write!(f, "{e}")
            }
        }
        match self {
            RationalExpr::Constant(c) => {
                if *c < Q::zero() {
                    write!(f, "-{}", -c)
                } else {
                    write!(f, "{c}")
                }
            }
            RationalExpr::Generator(l) => write!(f, "s{l}"),
            RationalExpr::Sum(a, b) => {
                wrap(a, 1, f)?;
                match b.as_ref() {
                    RationalExpr::Negation(c) => {
                        f.write_str(" - ")?;
                        wrap(c, 2, f)
                    }
                    _ => {
                        f.write_str(" + ")?;
                        wrap(b, 2, f)
                    }
                }
            }
            RationalExpr::Product(a, b) => {
                wrap(a, 2, f)?;
                f.write_str(" * ")?;
                wrap(b, 3, f)
            }
            RationalExpr::Negation(a) => {
                f.write_str("-")?;
                wrap(a, 3, f)
            }
            RationalExpr::Inverse(a) => {
                wrap(a, 4, f)?;
                f.write_str("^-1")
            }
        }
    }
}

impl Add for RationalExpr {
    type Output = RationalExpr;
    fn add(self, rhs: Self) -> Self {
        RationalExpr::Sum(Box::new(self), Box::new(rhs))
    }
}

impl Sub for RationalExpr {
    type Output = RationalExpr;
    fn sub(self, rhs: Self) -> Self {
        RationalExpr::Sum(
            Box::new(self),
            Box::new(RationalExpr::Negation(Box::new(rhs))),
        )
    }
}

impl Mul for RationalExpr {
    type Output = RationalExpr;
    fn mul(self, rhs: Self) -> Self {
        RationalExpr::Product(Box::new(self), Box::new(rhs))
    }
}

impl Neg for RationalExpr {
    type Output = RationalExpr;
    fn neg(self) -> Self {
        RationalExpr::Negation(Box::new(self))
    }
}

impl FromStr for RationalExpr {
    type Err = ExprParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let chars: Vec<(usize, char)> = s
            .char_indices()
            .filter(|(_, c)| !c.is_whitespace())
            .collect();
        let mut p = Parser { chars, pos: 0 };
        let e = p.sum()?;
        match p.peek() {
            None => Ok(e),
            Some((pos, found)) => Err(ExprParseError::Unexpected { pos, found }),
        }
    }
}

struct Parser {
    chars: Vec<(usize, char)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<(usize, char)> {
        self.chars.get(self.pos).copied()
    }

    fn peek_char(&self) -> Option<char> {
        self.peek().map(|(_, c)| c)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek_char();
        self.pos += 1;
        c
    }

    fn expect(&mut self, want: char) -> Result<(), ExprParseError> {
        match self.peek() {
            Some((_, c)) if c == want => {
                self.pos += 1;
                Ok(())
            }
            Some((pos, found)) => Err(ExprParseError::Unexpected { pos, found }),
            None => Err(ExprParseError::Eof),
        }
    }

    fn digits(&mut self) -> String {
        let mut out = String::new();
        while let Some(c) = self.peek_char().filter(char::is_ascii_digit) {
            out.push(c);
            self.pos += 1;
        }
        out
    }

    fn sum(&mut self) -> Result<RationalExpr, ExprParseError> {
        let mut acc = self.product()?;
        loop {
            match self.peek_char() {
                Some('+') => {
                    self.bump();
                    acc = acc + self.product()?;
                }
                Some('-') => {
                    self.bump();
                    acc = acc - self.product()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn product(&mut self) -> Result<RationalExpr, ExprParseError> {
        let mut acc = self.unary()?;
        while self.peek_char() == Some('*') {
            self.bump();
            acc = acc * self.unary()?;
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<RationalExpr, ExprParseError> {
        if self.peek_char() == Some('-') {
            self.bump();
            return Ok(-self.unary()?);
        }
        self.postfix()
    }

    fn postfix(&mut self) -> Result<RationalExpr, ExprParseError> {
        let mut e = self.atom()?;
        while self.peek_char() == Some('^') {
            self.bump();
            if self.peek_char() == Some('-') {
                self.bump();
                self.expect('1')?;
                e = e.inv();
            } else {
                let k = self.digits();
                let k: usize = k
                    .parse()
                    .map_err(|_| ExprParseError::BadNumber(k.clone()))?;
                e = e.pow(k);
            }
        }
        Ok(e)
    }

    fn atom(&mut self) -> Result<RationalExpr, ExprParseError> {
        match self.peek() {
            None => Err(ExprParseError::Eof),
            Some((_, '(')) => {
                self.bump();
                let e = self.sum()?;
                self.expect(')')?;
                Ok(e)
            }
            Some((_, 's')) => {
                self.bump();
                let idx = self.digits();
                match idx.parse::<u16>() {
                    Ok(i) if i >= 1 => Ok(RationalExpr::s(i)),
                    _ => Err(ExprParseError::BadGenerator(idx)),
                }
            }
            Some((_, c)) if c.is_ascii_digit() => {
                let mut text = self.digits();
                if let Some(sep @ ('/' | '.')) = self.peek_char() {
                    self.bump();
                    text.push(sep);
                    text.push_str(&self.digits());
                }
                parse_q(&text)
                    .map(RationalExpr::Constant)
                    .map_err(|_| ExprParseError::BadNumber(text))
            }
            Some((pos, found)) => Err(ExprParseError::Unexpected { pos, found }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::q;

    #[test]
    fn parses_resolvent() {
        let e: RationalExpr = "(5/2 - s1)^-1".parse().unwrap();
        let want = (RationalExpr::constant(q(5, 2)) - RationalExpr::s(1)).inv();
        assert_eq!(e, want);
        assert!(e.has_inverse());
        assert_eq!(e.degree(), None);
        assert_eq!(e.max_letter(), 1);
    }

    #[test]
    fn precedence_and_powers() {
        let e: RationalExpr = "s1*s2 + 3*s2^2 - -1".parse().unwrap();
        assert_eq!(e.degree(), Some(2));
        let p: RationalExpr = "s1^0".parse().unwrap();
        assert_eq!(p.degree(), Some(0));
        let e2: RationalExpr = " ( s1 + s2 ) * 0.5 ".parse().unwrap();
        assert_eq!(e2.degree(), Some(1));
    }

    #[test]
    fn rejects_garbage() {
        assert!("s0".parse::<RationalExpr>().is_err());
        assert!("(s1".parse::<RationalExpr>().is_err());
        assert!("s1 +".parse::<RationalExpr>().is_err());
        assert!("s1 ^ -2".parse::<RationalExpr>().is_err());
        assert!("x".parse::<RationalExpr>().is_err());
    }

    #[test]
    fn display_round_trips() {
        for src in [
            "(5/2 - s1)^-1",
            "s1*s2 + s2*s1",
            "-(s1 + 2)*s2^3",
            "1^-1",
            "(s1*(3 - s2)^-1 + -1/3)^-1",
        ] {
            let e: RationalExpr = src.parse().unwrap();
            let again: RationalExpr = e.to_string().parse().unwrap();
            assert_eq!(e, again, "{src} -> {e}");
        }
    }
}
