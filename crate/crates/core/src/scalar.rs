//! Scalar fields used by the crate.
//!
//! Core data lives in [`Q`] (arbitrary-precision rationals). `f64` is used
//! for norms, singular values and inverse-bearing float evaluations only.

use std::fmt::Debug;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Q = BigRational;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseScalarError {
    #[error("invalid integer {0:?}")]
    BadInteger(String),
    #[error("zero denominator")]
    ZeroDenominator,
}

pub trait Scalar:
    Clone
    + Debug
    + PartialEq
    + Zero
    + One
    + Neg<Output = Self>
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Send
    + Sync
    + 'static
{
    fn from_q(q: &Q) -> Self;
    fn to_f64(&self) -> f64;
}

impl Scalar for Q {
    fn from_q(q: &Q) -> Self {
        q.clone()
    }

    fn to_f64(&self) -> f64 {
        q_to_f64(self)
    }
}

impl Scalar for f64 {
    fn from_q(q: &Q) -> Self {
        q_to_f64(q)
    }

    fn to_f64(&self) -> f64 {
        *self
    }
}

/// `num / den` as a reduced rational.
pub fn q(num: i64, den: i64) -> Q {
    Q::new(BigInt::from(num), BigInt::from(den))
}

pub fn qi(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

/// Accurate conversion that survives numerators and denominators beyond `f64` range.
pub fn q_to_f64(x: &Q) -> f64 {
    const KEEP: u64 = 62;
    let (n, d) = (x.numer(), x.denom());
    let ns = n.bits().saturating_sub(KEEP);
    let ds = d.bits().saturating_sub(KEEP);
    let nf = (n >> ns as usize).to_f64().unwrap_or(0.0);
    let df = (d >> ds as usize).to_f64().unwrap_or(1.0);
    let exp = ns as i64 - ds as i64;
    (nf / df) * 2f64.powi(exp.clamp(-2000, 2000) as i32)
}

/// Parses `"3"`, `"-5/2"` or `"0.25"`.
pub fn parse_q(s: &str) -> Result<Q, ParseScalarError> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        return parse_pair(n.trim(), d.trim());
    }
    if let Some((int, frac)) = s.split_once('.') {
        let neg = int.starts_with('-');
        let digits = format!("{}{}", int.trim_start_matches(['-', '+']), frac);
        let num: BigInt = digits
            .parse()
            .map_err(|_| ParseScalarError::BadInteger(s.to_string()))?;
        let den = num_traits::pow(BigInt::from(10), frac.len());
        let v = Q::new(num, den);
        return Ok(if neg { -v } else { v });
    }
    parse_pair(s, "1")
}

pub fn parse_pair(num: &str, den: &str) -> Result<Q, ParseScalarError> {
    let n: BigInt = num
        .parse()
        .map_err(|_| ParseScalarError::BadInteger(num.to_string()))?;
    let d: BigInt = den
        .parse()
        .map_err(|_| ParseScalarError::BadInteger(den.to_string()))?;
    if d.is_zero() {
        return Err(ParseScalarError::ZeroDenominator);
    }
    Ok(Q::new(n, d))
}

/// Wire form `{"num": "...", "den": "..."}` with decimal-string integers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RationalJson {
    pub num: String,
    pub den: String,
}

impl From<&Q> for RationalJson {
    fn from(x: &Q) -> Self {
        RationalJson {
            num: x.numer().to_string(),
            den: x.denom().to_string(),
        }
    }
}

impl TryFrom<&RationalJson> for Q {
    type Error = ParseScalarError;

    fn try_from(r: &RationalJson) -> Result<Self, Self::Error> {
        parse_pair(&r.num, &r.den)
    }
}
