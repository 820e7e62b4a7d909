//! Exact rational numbers used for every ratio, bound and goodness value.
//!
//! Values are stored in lowest terms with a positive denominator. Text form is
//! always `p/q` (including integers, e.g. `1/1`); on input, plain integers and
//! terminating decimals such as `0.9948` are also accepted and converted
//! exactly.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RationalError {
    #[error("malformed rational {0:?}")]
    Malformed(String),
    #[error("zero denominator in {0:?}")]
    ZeroDenominator(String),
    #[error("rational {0:?} does not fit in 64-bit numerator/denominator")]
    Overflow(String),
}

/// An exact rational in lowest terms.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Rational(Ratio<i64>);

impl Rational {
    pub const ZERO: Rational = Rational(Ratio::new_raw(0, 1));
    pub const ONE: Rational = Rational(Ratio::new_raw(1, 1));
    pub const HALF: Rational = Rational(Ratio::new_raw(1, 2));

    /// Panics on a zero denominator.
    pub fn new(numer: i64, denom: i64) -> Self {
        Rational(Ratio::new(numer, denom))
    }

    pub fn try_new(numer: i64, denom: i64) -> Result<Self, RationalError> {
        if denom == 0 {
            return Err(RationalError::ZeroDenominator(format!("{numer}/{denom}")));
        }
        Ok(Self::new(numer, denom))
    }

    /// Builds `numer/denom` from wide integers, reducing before narrowing.
    pub fn from_u128(numer: u128, denom: u128) -> Result<Self, RationalError> {
        if denom == 0 {
            return Err(RationalError::ZeroDenominator(format!("{numer}/{denom}")));
        }
        let g = num_integer::gcd(numer, denom);
        let (n, d) = (numer / g, denom / g);
        match (i64::try_from(n), i64::try_from(d)) {
            (Ok(n), Ok(d)) => Ok(Rational(Ratio::new_raw(n, d))),
            _ => Err(RationalError::Overflow(format!("{numer}/{denom}"))),
        }
    }

    pub fn integer(n: i64) -> Self {
        Rational(Ratio::from_integer(n))
    }

    pub fn numer(&self) -> i64 {
        *self.0.numer()
    }

    pub fn denom(&self) -> i64 {
        *self.0.denom()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    /// `1 - self`.
    pub fn complement(&self) -> Self {
        Rational(Ratio::from_integer(1) - self.0)
    }

    /// `max(self, 1 - self)`: how far a ratio is from an even split.
    pub fn extreme(&self) -> Self {
        std::cmp::max(*self, self.complement())
    }

    /// Four-decimal rendering used in human-readable reports.
    pub fn decimal4(&self) -> String {
        format!("{:.4}", self.to_f64())
    }

    pub fn inner(&self) -> Ratio<i64> {
        self.0
    }
}

impl From<Ratio<i64>> for Rational {
    fn from(r: Ratio<i64>) -> Self {
        Rational(r)
    }
}

impl std::ops::Sub for Rational {
    type Output = Rational;
    fn sub(self, rhs: Self) -> Self {
        Rational(self.0 - rhs.0)
    }
}

impl std::ops::Add for Rational {
    type Output = Rational;
    fn add(self, rhs: Self) -> Self {
        Rational(self.0 + rhs.0)
    }
}

impl std::ops::Mul for Rational {
    type Output = Rational;
    fn mul(self, rhs: Self) -> Self {
        Rational(self.0 * rhs.0)
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.numer(), self.denom())
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.numer(), self.denom())
    }
}

fn parse_i64(s: &str, whole: &str) -> Result<i64, RationalError> {
    s.trim()
        .parse::<i64>()
        .map_err(|e| match e.kind() {
            std::num::IntErrorKind::PosOverflow | std::num::IntErrorKind::NegOverflow => {
                RationalError::Overflow(whole.to_string())
            }
            _ => RationalError::Malformed(whole.to_string()),
        })
}

fn parse_decimal(s: &str) -> Result<Rational, RationalError> {
    let t = s.trim();
    let (mantissa, exponent) = match t.find(['e', 'E']) {
        Some(pos) => (&t[..pos], parse_i64(&t[pos + 1..], s)?),
        None => (t, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = match digits.split_once('.') {
        Some((i, f)) => (i, f),
        None => (digits, ""),
    };
    if int_part.is_empty() && frac_part.is_empty()
        || !int_part.chars().all(|c| c.is_ascii_digit())
        || !frac_part.chars().all(|c| c.is_ascii_digit())
    {
        return Err(RationalError::Malformed(s.to_string()));
    }
    let all_digits = format!("{int_part}{frac_part}");
    let mut numer: i128 = 0;
    for c in all_digits.chars() {
        numer = numer
            .checked_mul(10)
            .and_then(|n| n.checked_add(c as i128 - '0' as i128))
            .ok_or_else(|| RationalError::Overflow(s.to_string()))?;
    }
    let scale = frac_part.len() as i64 - exponent;
    let mut denom: i128 = 1;
    if scale >= 0 {
        for _ in 0..scale {
            denom = denom
                .checked_mul(10)
                .ok_or_else(|| RationalError::Overflow(s.to_string()))?;
        }
    } else {
        for _ in 0..(-scale) {
            numer = numer
                .checked_mul(10)
                .ok_or_else(|| RationalError::Overflow(s.to_string()))?;
        }
    }
    let r = Rational::from_u128(numer as u128, denom as u128)?;
    Ok(if neg { Rational::new(-r.numer(), r.denom()) } else { r })
}

impl FromStr for Rational {
    type Err = RationalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once('/') {
            Some((n, d)) => {
                let n = parse_i64(n, s)?;
                let d = parse_i64(d, s)?;
                if d == 0 {
                    return Err(RationalError::ZeroDenominator(s.to_string()));
                }
                Ok(Rational::new(n, d))
            }
            None => parse_decimal(s),
        }
    }
}

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

struct RationalVisitor;

impl Visitor<'_> for RationalVisitor {
    type Value = Rational;

    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str("a rational as \"p/q\", an integer, or a terminating decimal")
    }

    fn visit_str<E: de::Error>(self, v: &str) -> Result<Rational, E> {
        v.parse().map_err(E::custom)
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> Result<Rational, E> {
        Ok(Rational::integer(v))
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> Result<Rational, E> {
        i64::try_from(v)
            .map(Rational::integer)
            .map_err(|_| E::custom(RationalError::Overflow(v.to_string())))
    }

    fn visit_f64<E: de::Error>(self, v: f64) -> Result<Rational, E> {
        if !v.is_finite() {
            return Err(E::custom(RationalError::Malformed(v.to_string())));
        }
        // Shortest round-trip rendering, so 0.2 becomes exactly 1/5.
        parse_decimal(&format!("{v}")).map_err(E::custom)
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        deserializer.deserialize_any(RationalVisitor)
    }
}

/// A non-negative fraction over wide integers, compared by cross
/// multiplication. Used in the solvers' inner loops where building a reduced
/// [`Rational`] per comparison would dominate the run time.
#[derive(Clone, Copy, Debug)]
pub struct Frac {
    pub num: u128,
    pub den: u128,
}

impl Frac {
    pub const ZERO: Frac = Frac { num: 0, den: 1 };
    pub const ONE: Frac = Frac { num: 1, den: 1 };

    pub fn new(num: u128, den: u128) -> Self {
        debug_assert!(den > 0);
        Frac { num, den }
    }

    pub fn to_rational(self) -> Rational {
        Rational::from_u128(self.num, self.den).expect("fraction exceeds 64-bit range")
    }

    pub fn from_rational(r: Rational) -> Self {
        debug_assert!(r.numer() >= 0);
        Frac { num: r.numer() as u128, den: r.denom() as u128 }
    }
}

impl PartialEq for Frac {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Frac {}

impl PartialOrd for Frac {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Frac {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.num * other.den).cmp(&(other.num * self.den))
    }
}
