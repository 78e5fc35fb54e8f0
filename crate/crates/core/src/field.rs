//! Scalar fields.
//!
//! Every algorithm in this crate is generic over a [`Field`], a small context
//! object that owns the arithmetic and the zero test. Two fields ship:
//!
//! * [`Exact`]: arbitrary-precision rationals. All correctness claims are made
//!   in this field; zero tests are exact.
//! * [`Real`]: IEEE doubles with a relative zero tolerance. Results are
//!   numerically unverified.
//!
//! The field is a value rather than a marker type because the real field's
//! zero threshold depends on the scale of the matrix being processed.

use std::fmt;
use std::ops::Mul;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FieldError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("cannot parse scalar {0:?}")]
    Parse(String),
    #[error("non-finite value {0}")]
    NonFinite(String),
}

/// Sign of an element of an ordered field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sign {
    Negative,
    Zero,
    Positive,
}

impl Mul for Sign {
    type Output = Sign;

    fn mul(self, rhs: Sign) -> Sign {
        match (self, rhs) {
            (Sign::Zero, _) | (_, Sign::Zero) => Sign::Zero,
            (a, b) if a == b => Sign::Positive,
            _ => Sign::Negative,
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Negative => "-",
            Sign::Zero => "0",
            Sign::Positive => "+",
        })
    }
}

/// Arithmetic over an ordered field.
pub trait Field: Clone + fmt::Debug + Send + Sync + 'static {
    type Elem: Clone + fmt::Debug + PartialEq + Send + Sync;

    fn zero(&self) -> Self::Elem;
    fn one(&self) -> Self::Elem;
    fn from_i64(&self, value: i64) -> Self::Elem;

    fn add(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn sub(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn mul(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn neg(&self, a: &Self::Elem) -> Self::Elem;
    fn div(&self, a: &Self::Elem, b: &Self::Elem) -> Result<Self::Elem, FieldError>;

    fn is_zero(&self, a: &Self::Elem) -> bool;
    fn sign(&self, a: &Self::Elem) -> Sign;

    /// Parses integers, `p/q` fractions and decimal literals.
    fn parse(&self, text: &str) -> Result<Self::Elem, FieldError>;
    /// `p/q` (or `p`) for rationals, shortest round-trip decimal for reals.
    fn render(&self, a: &Self::Elem) -> String;

    /// Approximate absolute value, used only for calibration and reporting.
    fn magnitude(&self, a: &Self::Elem) -> f64;

    /// A copy of this field whose zero test is scaled to a matrix whose
    /// largest entry has the given magnitude.
    fn calibrate(&self, _max_magnitude: f64) -> Self {
        self.clone()
    }

    fn is_exact(&self) -> bool;

    /// True when `a` is within `factor` times the zero threshold. Always
    /// equals `is_zero` in exact fields.
    fn near_zero(&self, a: &Self::Elem, _factor: f64) -> bool {
        self.is_zero(a)
    }

    /// Relative zero tolerance of an inexact field.
    fn zero_tolerance(&self) -> Option<f64> {
        None
    }

    fn name(&self) -> &'static str;
}

/// Exact rational arithmetic on [`BigRational`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Exact;

impl Field for Exact {
    type Elem = BigRational;

    fn zero(&self) -> BigRational {
        BigRational::zero()
    }

    fn one(&self) -> BigRational {
        BigRational::from_integer(BigInt::from(1))
    }

    fn from_i64(&self, value: i64) -> BigRational {
        BigRational::from_integer(BigInt::from(value))
    }

    fn add(&self, a: &BigRational, b: &BigRational) -> BigRational {
        a + b
    }

    fn sub(&self, a: &BigRational, b: &BigRational) -> BigRational {
        a - b
    }

    fn mul(&self, a: &BigRational, b: &BigRational) -> BigRational {
        a * b
    }

    fn neg(&self, a: &BigRational) -> BigRational {
        -a
    }

    fn div(&self, a: &BigRational, b: &BigRational) -> Result<BigRational, FieldError> {
        if b.is_zero() {
            return Err(FieldError::DivisionByZero);
        }
        Ok(a / b)
    }

    fn is_zero(&self, a: &BigRational) -> bool {
        a.is_zero()
    }

    fn sign(&self, a: &BigRational) -> Sign {
        match a.numer().sign() {
            num_bigint::Sign::Minus => Sign::Negative,
            num_bigint::Sign::NoSign => Sign::Zero,
            num_bigint::Sign::Plus => Sign::Positive,
        }
    }

    fn parse(&self, text: &str) -> Result<BigRational, FieldError> {
        parse_rational(text)
    }

    fn render(&self, a: &BigRational) -> String {
        if a.is_integer() {
            a.numer().to_string()
        } else {
            format!("{}/{}", a.numer(), a.denom())
        }
    }

    fn magnitude(&self, a: &BigRational) -> f64 {
        a.abs().to_f64().unwrap_or(f64::INFINITY)
    }

    fn is_exact(&self) -> bool {
        true
    }

    fn name(&self) -> &'static str {
        "rational"
    }
}

/// Default relative zero tolerance of the real field.
pub const DEFAULT_REAL_TOLERANCE: f64 = 1e-12;

/// Machine reals. A value is zero when its magnitude is at most
/// `tolerance * scale`, where `scale` is the largest entry magnitude of the
/// matrix the field was calibrated against (1 if uncalibrated).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Real {
    tolerance: f64,
    scale: f64,
}

impl Default for Real {
    fn default() -> Self {
        Real::new(DEFAULT_REAL_TOLERANCE)
    }
}

impl Real {
    /// # Panics
    /// If `tolerance` is not a positive finite number.
    pub fn new(tolerance: f64) -> Self {
        assert!(
            tolerance.is_finite() && tolerance > 0.0,
            "real-field tolerance must be positive and finite"
        );
        Real {
            tolerance,
            scale: 1.0,
        }
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    /// Absolute threshold used by `is_zero`.
    pub fn threshold(&self) -> f64 {
        self.tolerance * self.scale
    }
}

impl Field for Real {
    type Elem = f64;

    fn zero(&self) -> f64 {
        0.0
    }

    fn one(&self) -> f64 {
        1.0
    }

    fn from_i64(&self, value: i64) -> f64 {
        value as f64
    }

    fn add(&self, a: &f64, b: &f64) -> f64 {
        a + b
    }

    fn sub(&self, a: &f64, b: &f64) -> f64 {
        a - b
    }

    fn mul(&self, a: &f64, b: &f64) -> f64 {
        a * b
    }

    fn neg(&self, a: &f64) -> f64 {
        -a
    }

    fn div(&self, a: &f64, b: &f64) -> Result<f64, FieldError> {
        if *b == 0.0 {
            return Err(FieldError::DivisionByZero);
        }
        let q = a / b;
        if q.is_finite() {
            Ok(q)
        } else {
            Err(FieldError::NonFinite(q.to_string()))
        }
    }

    fn is_zero(&self, a: &f64) -> bool {
        a.abs() <= self.threshold()
    }

    fn sign(&self, a: &f64) -> Sign {
        if self.is_zero(a) {
            Sign::Zero
        } else if *a > 0.0 {
            Sign::Positive
        } else {
            Sign::Negative
        }
    }

    fn parse(&self, text: &str) -> Result<f64, FieldError> {
        let text = text.trim();
        let value = if text.contains('/') {
            parse_rational(text)?
                .to_f64()
                .ok_or_else(|| FieldError::Parse(text.to_string()))?
        } else {
            f64::from_str(text).map_err(|_| FieldError::Parse(text.to_string()))?
        };
        if value.is_finite() {
            Ok(value)
        } else {
            Err(FieldError::NonFinite(text.to_string()))
        }
    }

    fn render(&self, a: &f64) -> String {
        if *a == 0.0 {
            "0".to_string()
        } else {
            a.to_string()
        }
    }

    fn magnitude(&self, a: &f64) -> f64 {
        a.abs()
    }

    fn calibrate(&self, max_magnitude: f64) -> Self {
        let scale = if max_magnitude.is_finite() && max_magnitude > 0.0 {
            max_magnitude
        } else {
            1.0
        };
        Real {
            tolerance: self.tolerance,
            scale,
        }
    }

    fn is_exact(&self) -> bool {
        false
    }

    fn near_zero(&self, a: &f64, factor: f64) -> bool {
        a.abs() <= factor * self.threshold()
    }

    fn zero_tolerance(&self) -> Option<f64> {
        Some(self.tolerance)
    }

    fn name(&self) -> &'static str {
        "real"
    }
}

/// Parses `p`, `p/q`, or a decimal literal such as `-1.25e-3` exactly.
pub fn parse_rational(text: &str) -> Result<BigRational, FieldError> {
    let text = text.trim();
    let bad = || FieldError::Parse(text.to_string());
    if text.is_empty() {
        return Err(bad());
    }
    if let Some((p, q)) = text.split_once('/') {
        let p = BigInt::from_str(p.trim()).map_err(|_| bad())?;
        let q = BigInt::from_str(q.trim()).map_err(|_| bad())?;
        if q.is_zero() {
            return Err(FieldError::DivisionByZero);
        }
        return Ok(BigRational::new(p, q));
    }
    if let Ok(p) = BigInt::from_str(text) {
        return Ok(BigRational::from_integer(p));
    }

    // Decimal literal: [sign] digits [. digits] [e [sign] digits]
    let (mantissa, exponent) = match text.find(['e', 'E']) {
        Some(pos) => {
            let exp: i64 = text[pos + 1..].parse().map_err(|_| bad())?;
            (&text[..pos], exp)
        }
        None => (text, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty()
        || !int_part.bytes().all(|b| b.is_ascii_digit())
        || !frac_part.bytes().all(|b| b.is_ascii_digit())
        || exponent.unsigned_abs() > 10_000
    {
        return Err(bad());
    }
    let all_digits = format!("{int_part}{frac_part}");
    let mut numer = BigInt::from_str(&all_digits).map_err(|_| bad())?;
    if negative {
        numer = -numer;
    }
    let shift = exponent - frac_part.len() as i64;
    let ten = BigInt::from(10);
    let power = num_traits::pow(ten, shift.unsigned_abs() as usize);
    Ok(if shift >= 0 {
        BigRational::from_integer(numer * power)
    } else {
        BigRational::new(numer, power)
    })
}
