//! Exact scalars: arbitrary-precision rationals and real quadratic extensions.
//!
//! All geometric decisions in this crate are made over these types; floating
//! point only appears when coordinates are flattened for SVG output. Rationals
//! are [`num_rational::BigRational`] values, always stored reduced with a
//! positive denominator. [`QuadRat`] represents `a + b·√d` for a square-free
//! `d ≥ 2`, with the field tag carried per value: combining values from two
//! different irrational fields is an error, never an approximation. Pure
//! rationals are stored with `b = 0, d = 1` and combine with any field.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::de::Error as _;
use serde::ser::SerializeStruct;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use thiserror::Error;

/// Arbitrary-precision rational scalar. Reduced, denominator positive.
pub type Rational = BigRational;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExactError {
    #[error("expected a positive value, got {0}")]
    NonPositive(String),
    #[error("division by zero")]
    DivisionByZero,
    #[error("field mismatch: cannot combine sqrt({0}) with sqrt({1}) exactly")]
    FieldMismatch(u64, u64),
    #[error("no exact square root of {0} in a supported quadratic field")]
    UnsupportedSqrt(String),
}

/// Error from parsing exact scalar syntax (`p/q`, `p/q+r/s sqrt d`).
#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("parse error at byte {pos} in {input:?}: {msg}")]
pub struct ParseError {
    pub pos: usize,
    pub msg: String,
    pub input: String,
}

impl ParseError {
    fn new(pos: usize, msg: impl Into<String>, input: &str) -> Self {
        ParseError {
            pos,
            msg: msg.into(),
            input: input.to_string(),
        }
    }

    /// Shift the reported position, for parsers that work on substrings.
    pub fn offset(mut self, by: usize, full_input: &str) -> Self {
        self.pos += by;
        self.input = full_input.to_string();
        self
    }
}

pub fn rat(p: i64, q: i64) -> Rational {
    BigRational::new(p.into(), q.into())
}

pub fn rat_int(p: i64) -> Rational {
    BigRational::from_integer(p.into())
}

/// `1/2^k` as an exact rational.
pub fn pow2_inv(k: u32) -> Rational {
    BigRational::new(BigInt::one(), BigInt::one() << k)
}

/// Largest positive rational `m` such that `a/m` and `b/m` are both integers.
///
/// For reduced inputs `p1/q1` and `p2/q2` this is `gcd(p1,p2)/lcm(q1,q2)`.
/// This is the commensurability gauge used on inverse moduli of cylinders.
pub fn rat_gcd(a: &Rational, b: &Rational) -> Result<Rational, ExactError> {
    if !a.is_positive() {
        return Err(ExactError::NonPositive(a.to_string()));
    }
    if !b.is_positive() {
        return Err(ExactError::NonPositive(b.to_string()));
    }
    Ok(BigRational::new(
        a.numer().gcd(b.numer()),
        a.denom().lcm(b.denom()),
    ))
}

/// Splits `n = s²·f` with `f` square-free; returns `(s, f)`.
fn extract_square(n: u64) -> (u64, u64) {
    let mut s = 1u64;
    let mut f = n;
    let mut p = 2u64;
    while p * p <= f {
        while f.is_multiple_of(p * p) {
            f /= p * p;
            s *= p;
        }
        p += 1;
    }
    (s, f)
}

/// Element `a + b·√d` of the real quadratic field `Q(√d)`.
///
/// Invariants: `d` is square-free; `b = 0` implies `d = 1` (the value is
/// rational and comparable across fields); `b ≠ 0` implies `d ≥ 2`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct QuadRat {
    a: Rational,
    b: Rational,
    d: u64,
}

impl QuadRat {
    /// Builds `a + b·√d`, normalizing the representation: square factors of
    /// `d` are folded into `b`, and `√1`/zero coefficients collapse to the
    /// rational form `(a, 0, 1)`.
    pub fn new(a: Rational, b: Rational, d: u64) -> QuadRat {
        if b.is_zero() || d == 0 {
            return QuadRat {
                a,
                b: Rational::zero(),
                d: 1,
            };
        }
        let (s, f) = extract_square(d);
        if f == 1 {
            return QuadRat {
                a: a + b * rat_int(s as i64),
                b: Rational::zero(),
                d: 1,
            };
        }
        QuadRat {
            a,
            b: b * rat_int(s as i64),
            d: f,
        }
    }

    pub fn from_rational(a: Rational) -> QuadRat {
        QuadRat {
            a,
            b: Rational::zero(),
            d: 1,
        }
    }

    pub fn from_int(n: i64) -> QuadRat {
        QuadRat::from_rational(rat_int(n))
    }

    /// `√n` for a non-negative integer `n`.
    pub fn sqrt_int(n: u64) -> QuadRat {
        QuadRat::new(Rational::zero(), Rational::one(), n)
    }

    /// Exact square root of a non-negative rational: `√(p/q) = √(p·q)/q`.
    pub fn sqrt_rational(r: &Rational) -> Result<QuadRat, ExactError> {
        if r.is_negative() {
            return Err(ExactError::UnsupportedSqrt(r.to_string()));
        }
        if r.is_zero() {
            return Ok(QuadRat::from_int(0));
        }
        let n = r.numer() * r.denom();
        let n_u64 = n
            .to_u64()
            .ok_or_else(|| ExactError::UnsupportedSqrt(r.to_string()))?;
        let (s, f) = extract_square(n_u64);
        let coeff = BigRational::new(BigInt::from(s), r.denom().clone());
        Ok(QuadRat::new(Rational::zero(), coeff, f))
    }

    pub fn rational_part(&self) -> &Rational {
        &self.a
    }

    pub fn sqrt_coeff(&self) -> &Rational {
        &self.b
    }

    pub fn radicand(&self) -> u64 {
        self.d
    }

    pub fn is_rational(&self) -> bool {
        self.b.is_zero()
    }

    pub fn as_rational(&self) -> Option<&Rational> {
        self.is_rational().then_some(&self.a)
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    /// Field tag; `None` for plain rationals.
    pub fn field(&self) -> Option<u64> {
        (!self.is_rational()).then_some(self.d)
    }

    /// Common field of two values, or a mismatch error when both carry
    /// distinct irrational parts.
    pub fn join_field(&self, other: &QuadRat) -> Result<u64, ExactError> {
        match (self.field(), other.field()) {
            (None, None) => Ok(1),
            (Some(d), None) | (None, Some(d)) => Ok(d),
            (Some(d1), Some(d2)) if d1 == d2 => Ok(d1),
            (Some(d1), Some(d2)) => Err(ExactError::FieldMismatch(d1, d2)),
        }
    }

    /// Common field over a slice of values.
    pub fn common_field(values: &[&QuadRat]) -> Result<u64, ExactError> {
        let mut d = 1u64;
        for v in values {
            if let Some(dv) = v.field() {
                if d == 1 {
                    d = dv;
                } else if d != dv {
                    return Err(ExactError::FieldMismatch(d, dv));
                }
            }
        }
        Ok(d)
    }

    fn unchecked(a: Rational, b: Rational, d: u64) -> QuadRat {
        QuadRat::new(a, b, d)
    }

    pub fn try_add(&self, other: &QuadRat) -> Result<QuadRat, ExactError> {
        let d = self.join_field(other)?;
        Ok(QuadRat::unchecked(
            &self.a + &other.a,
            &self.b + &other.b,
            d,
        ))
    }

    pub fn try_sub(&self, other: &QuadRat) -> Result<QuadRat, ExactError> {
        let d = self.join_field(other)?;
        Ok(QuadRat::unchecked(
            &self.a - &other.a,
            &self.b - &other.b,
            d,
        ))
    }

    /// Exact product: `(a1 + b1√d)(a2 + b2√d) = (a1a2 + b1b2·d) + (a1b2 + a2b1)√d`.
    pub fn try_mul(&self, other: &QuadRat) -> Result<QuadRat, ExactError> {
        let d = self.join_field(other)?;
        let a = &self.a * &other.a + &self.b * &other.b * rat_int(d as i64);
        let b = &self.a * &other.b + &other.a * &self.b;
        Ok(QuadRat::unchecked(a, b, d))
    }

    /// Exact reciprocal via the conjugate: `1/(a+b√d) = (a−b√d)/(a²−b²d)`.
    ///
    /// The denominator cannot vanish for a nonzero value because `√d` is
    /// irrational for square-free `d ≥ 2`.
    pub fn try_inv(&self) -> Result<QuadRat, ExactError> {
        if self.is_zero() {
            return Err(ExactError::DivisionByZero);
        }
        if self.is_rational() {
            return Ok(QuadRat::from_rational(self.a.recip()));
        }
        let den = &self.a * &self.a - &self.b * &self.b * rat_int(self.d as i64);
        debug_assert!(!den.is_zero());
        Ok(QuadRat::unchecked(&self.a / &den, -&self.b / &den, self.d))
    }

    pub fn try_div(&self, other: &QuadRat) -> Result<QuadRat, ExactError> {
        self.try_mul(&other.try_inv()?)
    }

    /// Exact sign of `a + b√d` without floating point: case analysis on the
    /// signs of `a` and `b`, comparing `a²` against `b²·d` when they differ.
    pub fn signum(&self) -> i32 {
        let sa = rational_sign(&self.a);
        if self.b.is_zero() {
            return sa;
        }
        let sb = rational_sign(&self.b);
        if self.a.is_zero() || sa == sb {
            return sb;
        }
        let lhs = &self.a * &self.a;
        let rhs = &self.b * &self.b * rat_int(self.d as i64);
        match lhs.cmp(&rhs) {
            Ordering::Greater => sa,
            Ordering::Less => sb,
            // a² = b²·d would make √d rational; unreachable for valid values.
            Ordering::Equal => 0,
        }
    }

    pub fn is_positive(&self) -> bool {
        self.signum() > 0
    }

    pub fn is_negative(&self) -> bool {
        self.signum() < 0
    }

    /// Exact floor, via integer square-root brackets on `(b√d)²`.
    pub fn floor(&self) -> BigInt {
        if self.is_rational() {
            return self.a.floor().to_integer();
        }
        // s/q ≤ √(p/q) < (s+1)/q with s = isqrt(p·q), p/q = b²·d.
        let sq = &self.b * &self.b * rat_int(self.d as i64);
        let s = (sq.numer() * sq.denom()).sqrt();
        let root_lo = BigRational::new(s.clone(), sq.denom().clone());
        let root_hi = BigRational::new(s + 1, sq.denom().clone());
        let lo = if self.b.is_positive() {
            &self.a + root_lo
        } else {
            &self.a - root_hi
        };
        let mut n = lo.floor().to_integer();
        // The bracket has width < 1/denom, so at most one correction is needed.
        let next = QuadRat::from_rational(BigRational::from_integer(&n + 1));
        if self.partial_cmp(&next).expect("same field") != Ordering::Less {
            n += 1;
        }
        n
    }

    pub fn ceil(&self) -> BigInt {
        -(-self).floor()
    }

    /// Lossy conversion for rendering only; never used in decisions.
    pub fn to_f64(&self) -> Option<f64> {
        Some(self.a.to_f64()? + self.b.to_f64()? * (self.d as f64).sqrt())
    }
}

fn rational_sign(r: &Rational) -> i32 {
    if r.is_zero() {
        0
    } else if r.is_positive() {
        1
    } else {
        -1
    }
}

impl From<Rational> for QuadRat {
    fn from(a: Rational) -> Self {
        QuadRat::from_rational(a)
    }
}

impl From<i64> for QuadRat {
    fn from(n: i64) -> Self {
        QuadRat::from_int(n)
    }
}

impl PartialOrd for QuadRat {
    /// Exact order; `None` when the two values live in distinct irrational
    /// fields and cannot be combined.
    fn partial_cmp(&self, other: &QuadRat) -> Option<Ordering> {
        let diff = self.try_sub(other).ok()?;
        Some(match diff.signum() {
            1 => Ordering::Greater,
            -1 => Ordering::Less,
            _ => Ordering::Equal,
        })
    }
}

// Operator impls panic on field mismatch; they are used internally after a
// `common_field`/`join_field` validation at the operation boundary.
macro_rules! quad_binop {
    ($trait:ident, $method:ident, $checked:ident) => {
        impl $trait for &QuadRat {
            type Output = QuadRat;
            fn $method(self, rhs: &QuadRat) -> QuadRat {
                self.$checked(rhs)
                    .expect("field mismatch in checked context")
            }
        }
        impl $trait for QuadRat {
            type Output = QuadRat;
            fn $method(self, rhs: QuadRat) -> QuadRat {
                (&self).$method(&rhs)
            }
        }
    };
}

quad_binop!(Add, add, try_add);
quad_binop!(Sub, sub, try_sub);
quad_binop!(Mul, mul, try_mul);
quad_binop!(Div, div, try_div);

impl Neg for &QuadRat {
    type Output = QuadRat;
    fn neg(self) -> QuadRat {
        QuadRat {
            a: -&self.a,
            b: -&self.b,
            d: self.d,
        }
    }
}

impl Neg for QuadRat {
    type Output = QuadRat;
    fn neg(self) -> QuadRat {
        -&self
    }
}

impl fmt::Display for QuadRat {
    /// Canonical text form, matching the parser: `p/q`, `p/q+r/s sqrt d`
    /// written without spaces, e.g. `1/2+3/4sqrt2`, `-sqrt2`, `1-sqrt2`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_rational() {
            return write!(f, "{}", self.a);
        }
        if !self.a.is_zero() {
            write!(f, "{}", self.a)?;
            if self.b.is_positive() {
                write!(f, "+")?;
            }
        }
        let mag = self.b.abs();
        if self.b.is_negative() {
            write!(f, "-")?;
        }
        if !mag.is_one() {
            write!(f, "{}", mag)?;
        }
        write!(f, "sqrt{}", self.d)
    }
}

/// `p`/`p/q` string form used in JSON payloads.
pub fn rational_to_string(r: &Rational) -> String {
    r.to_string()
}

/// Parses `p` or `p/q` with position-carrying errors. Decimal notation is
/// rejected so no precision is silently lost at the boundary.
pub fn parse_rational(input: &str) -> Result<Rational, ParseError> {
    let s = input.trim();
    let base = input.len() - input.trim_start().len();
    if s.is_empty() {
        return Err(ParseError::new(base, "empty value", input));
    }
    if let Some(i) = s.find('.') {
        return Err(ParseError::new(
            base + i,
            "decimal input not supported, use p/q",
            input,
        ));
    }
    let (num_str, den_str) = match s.find('/') {
        Some(i) => (&s[..i], Some((&s[i + 1..], i + 1))),
        None => (s, None),
    };
    let num: BigInt = num_str
        .parse()
        .map_err(|_| ParseError::new(base, format!("invalid integer {num_str:?}"), input))?;
    let den: BigInt = match den_str {
        None => BigInt::one(),
        Some((d, pos)) => {
            let den: BigInt = d.parse().map_err(|_| {
                ParseError::new(base + pos, format!("invalid integer {d:?}"), input)
            })?;
            if den.is_zero() {
                return Err(ParseError::new(base + pos, "zero denominator", input));
            }
            den
        }
    };
    Ok(BigRational::new(num, den))
}

/// Parses `p/q`, `p/q+r/s sqrt d`, `r/s sqrt d`, `sqrt d` (with `sqrt` or `√`,
/// an optional `*`, and optional parentheses around `d`).
pub fn parse_quadrat(input: &str) -> Result<QuadRat, ParseError> {
    let s = input.trim();
    let base = input.len() - input.trim_start().len();
    if s.is_empty() {
        return Err(ParseError::new(base, "empty value", input));
    }
    if let Some(i) = s.find('.') {
        return Err(ParseError::new(
            base + i,
            "decimal input not supported, use p/q",
            input,
        ));
    }

    // Split into at most two terms on a '+'/'-' that is not a leading sign.
    let bytes = s.as_bytes();
    let mut split = None;
    let mut i = 1;
    while i < bytes.len() {
        if bytes[i] == b'+' || bytes[i] == b'-' {
            let prev = bytes[i - 1];
            if prev != b'/' && prev != b'*' && prev != b'+' && prev != b'-' {
                split = Some(i);
                break;
            }
        }
        i += 1;
    }

    match split {
        None => parse_term(s, base, input),
        Some(i) => {
            let first = parse_term(&s[..i], base, input)?;
            let second = parse_term(&s[i..], base + i, input)?;
            first
                .try_add(&second)
                .map_err(|e| ParseError::new(base, e.to_string(), input))
        }
    }
}

/// One signed term: a rational, or `[coeff][*](sqrt|√)[(]d[)]`.
fn parse_term(term: &str, base: usize, input: &str) -> Result<QuadRat, ParseError> {
    let (sign, rest, off) = match term.as_bytes().first() {
        Some(b'+') => (1, &term[1..], 1),
        Some(b'-') => (-1, &term[1..], 1),
        _ => (1, term, 0),
    };
    let sqrt_pos = rest
        .find("sqrt")
        .map(|i| (i, 4))
        .or_else(|| rest.find('√').map(|i| (i, '√'.len_utf8())));
    let value = match sqrt_pos {
        None => {
            QuadRat::from_rational(parse_rational(rest).map_err(|e| e.offset(base + off, input))?)
        }
        Some((i, tok_len)) => {
            let coeff_str = rest[..i].trim_end_matches('*');
            let coeff = if coeff_str.is_empty() {
                Rational::one()
            } else {
                parse_rational(coeff_str).map_err(|e| e.offset(base + off, input))?
            };
            let d_str = rest[i + tok_len..]
                .trim()
                .trim_start_matches('(')
                .trim_end_matches(')');
            let d: u64 = d_str.parse().map_err(|_| {
                ParseError::new(
                    base + off + i + tok_len,
                    format!("invalid radicand {d_str:?}"),
                    input,
                )
            })?;
            if d == 0 {
                return Err(ParseError::new(
                    base + off + i + tok_len,
                    "radicand must be positive",
                    input,
                ));
            }
            QuadRat::new(Rational::zero(), coeff, d)
        }
    };
    Ok(if sign < 0 { -value } else { value })
}

/// Serde adapter for `Rational` fields rendered as `"p/q"` strings.
pub mod rat_str {
    use super::*;

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&rational_to_string(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        parse_rational(&s).map_err(D::Error::custom)
    }
}

/// Serde adapter for `(Rational, Rational)` pairs.
pub mod rat_pair_str {
    use super::*;

    pub fn serialize<S: Serializer>(v: &(Rational, Rational), s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeTuple;
        let mut t = s.serialize_tuple(2)?;
        t.serialize_element(&rational_to_string(&v.0))?;
        t.serialize_element(&rational_to_string(&v.1))?;
        t.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<(Rational, Rational), D::Error> {
        let (a, b) = <(String, String)>::deserialize(d)?;
        Ok((
            parse_rational(&a).map_err(D::Error::custom)?,
            parse_rational(&b).map_err(D::Error::custom)?,
        ))
    }
}

impl Serialize for QuadRat {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("QuadRat", 3)?;
        st.serialize_field("a", &rational_to_string(&self.a))?;
        st.serialize_field("b", &rational_to_string(&self.b))?;
        st.serialize_field("d", &self.d)?;
        st.end()
    }
}

impl<'de> Deserialize<'de> for QuadRat {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            a: String,
            b: String,
            d: u64,
        }
        let raw = Raw::deserialize(d)?;
        let a = parse_rational(&raw.a).map_err(D::Error::custom)?;
        let b = parse_rational(&raw.b).map_err(D::Error::custom)?;
        Ok(QuadRat::new(a, b, raw.d))
    }
}
