//! Exact rational scalars used everywhere measures and thresholds appear.
//!
//! `Rat` is a reduced `num::BigRational` (lowest terms, positive denominator —
//! `num` maintains both invariants). No floating point enters any computation;
//! floats only appear in reports as display approximations.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, ToPrimitive, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub type Rat = BigRational;

/// Rational from machine integers.
pub fn rat(num: i64, den: i64) -> Rat {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn rat_u64(n: u64) -> Rat {
    BigRational::from_integer(BigInt::from(n))
}

pub fn rat_zero() -> Rat {
    BigRational::zero()
}

pub fn rat_one() -> Rat {
    BigRational::one()
}

/// Parses "p/q" or a bare integer "p". Rejects zero denominators and floats.
pub fn parse_rat(s: &str) -> Result<Rat> {
    let s = s.trim();
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let n: BigInt = num
        .parse()
        .map_err(|_| Error::Malformed(format!("bad rational numerator {num:?}")))?;
    let d: BigInt = den
        .parse()
        .map_err(|_| Error::Malformed(format!("bad rational denominator {den:?}")))?;
    if d.is_zero() {
        return Err(Error::Malformed(format!("zero denominator in {s:?}")));
    }
    Ok(BigRational::new(n, d))
}

/// Canonical "p/q" rendering (integers render as "p/1" to keep output regular).
pub fn format_rat(r: &Rat) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Approximation for human-readable report lines only.
pub fn rat_to_f64(r: &Rat) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

fn bigint_to_json(i: &BigInt) -> serde_json::Value {
    match i.to_i64() {
        Some(v) => serde_json::Value::from(v),
        None => serde_json::Value::from(i.to_string()),
    }
}

fn bigint_from_json(v: &serde_json::Value) -> std::result::Result<BigInt, String> {
    match v {
        serde_json::Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                Ok(BigInt::from(i))
            } else if let Some(u) = n.as_u64() {
                Ok(BigInt::from(u))
            } else {
                Err(format!("non-integer number {n}"))
            }
        }
        serde_json::Value::String(s) => s.parse().map_err(|_| format!("bad integer string {s:?}")),
        other => Err(format!("expected integer, got {other}")),
    }
}

/// Serializable rational: a `[num, den]` pair. Integers that do not fit in
/// an i64 fall back to decimal strings so nothing is ever rounded.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Rq(pub Rat);

impl From<Rat> for Rq {
    fn from(r: Rat) -> Self {
        Rq(r)
    }
}

impl Rq {
    pub fn rat(&self) -> &Rat {
        &self.0
    }
}

impl Serialize for Rq {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        let pair = vec![bigint_to_json(self.0.numer()), bigint_to_json(self.0.denom())];
        pair.serialize(ser)
    }
}

impl<'de> Deserialize<'de> for Rq {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let vals: Vec<serde_json::Value> = Vec::deserialize(de)?;
        if vals.len() != 2 {
            return Err(D::Error::custom("rational must be a [num, den] pair"));
        }
        let n = bigint_from_json(&vals[0]).map_err(D::Error::custom)?;
        let d = bigint_from_json(&vals[1]).map_err(D::Error::custom)?;
        if d.is_zero() {
            return Err(D::Error::custom("zero denominator"));
        }
        Ok(Rq(BigRational::new(n, d)))
    }
}

/// Ceiling of a nonnegative rational as u64, erroring on overflow.
pub fn rat_ceil_u64(r: &Rat) -> Result<u64> {
    if r.is_negative() {
        return Ok(0);
    }
    let c = r.ceil();
    c.to_integer()
        .to_u64()
        .ok_or_else(|| Error::SizeCap { context: format!("ceiling of {} exceeds u64", format_rat(r)) })
}
