//! Exact rational scalars.
//!
//! Every price, value, cost and budget in the model is a [`Scalar`]. Bang-per-buck
//! comparisons and budget checks are decided exactly, so ties are real ties.

use std::cmp::Ordering;
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};
use std::str::FromStr;

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Arbitrary-precision rational number, always in lowest terms with a positive denominator.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Scalar(BigRational);

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ScalarParseError {
    #[error("empty number")]
    Empty,
    #[error("invalid number `{0}`")]
    Invalid(String),
    #[error("zero denominator in `{0}`")]
    ZeroDenominator(String),
}

impl Scalar {
    pub fn zero() -> Self {
        Scalar(BigRational::zero())
    }

    pub fn one() -> Self {
        Scalar(BigRational::one())
    }

    pub fn from_int(n: i64) -> Self {
        Scalar(BigRational::from_integer(BigInt::from(n)))
    }

    /// `num / den`. Panics if `den == 0`.
    pub fn ratio(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        Scalar(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    /// Exact conversion of a finite float (every finite `f64` is a dyadic rational).
    pub fn from_f64(x: f64) -> Option<Self> {
        BigRational::from_float(x).map(Scalar)
    }

    pub fn as_rational(&self) -> &BigRational {
        &self.0
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }

    pub fn abs(&self) -> Self {
        Scalar(self.0.abs())
    }

    pub fn recip(&self) -> Self {
        Scalar(self.0.recip())
    }

    pub fn floor(&self) -> Self {
        Scalar(self.0.floor())
    }

    pub fn ceil(&self) -> Self {
        Scalar(self.0.ceil())
    }

    pub fn to_i64(&self) -> Option<i64> {
        if self.0.is_integer() {
            self.0.numer().to_i64()
        } else {
            None
        }
    }

    pub fn min_of(a: &Scalar, b: &Scalar) -> Scalar {
        if a <= b {
            a.clone()
        } else {
            b.clone()
        }
    }

    pub fn max_of(a: &Scalar, b: &Scalar) -> Scalar {
        if a >= b {
            a.clone()
        } else {
            b.clone()
        }
    }

    /// Largest dyadic `2^-k` (k ≥ 0) that is `<= self`. Requires `self > 0`.
    pub fn dyadic_floor(&self) -> Scalar {
        assert!(self.is_positive());
        let mut d = Scalar::one();
        while d > *self {
            d = d / Scalar::from_int(2);
        }
        d
    }

    /// The square root when it is itself rational.
    pub fn exact_sqrt(&self) -> Option<Scalar> {
        if self.is_negative() {
            return None;
        }
        let (num, den) = (self.0.numer(), self.0.denom());
        let (rn, rd) = (num.sqrt(), den.sqrt());
        (&rn * &rn == *num && &rd * &rd == *den).then(|| Scalar(BigRational::new(rn, rd)))
    }

    /// Decimal rendering with `digits` fractional digits (truncated toward zero).
    pub fn to_decimal_string(&self, digits: usize) -> String {
        let scale = BigInt::from(10u32).pow(digits as u32);
        let scaled = (&self.0 * BigRational::from_integer(scale.clone()))
            .trunc()
            .to_integer();
        let neg = scaled.is_negative() || (scaled.is_zero() && self.0.is_negative());
        let mag = scaled.abs();
        let int_part = &mag / &scale;
        let frac_part = &mag % &scale;
        let sign = if neg { "-" } else { "" };
        if digits == 0 {
            format!("{sign}{int_part}")
        } else {
            format!("{sign}{int_part}.{:0>width$}", frac_part.to_string(), width = digits)
        }
    }
}

impl FromStr for Scalar {
    type Err = ScalarParseError;

    /// Accepts integers (`3`), decimals (`-4.25`, `.5`) and fractions (`22/5`).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        if t.is_empty() {
            return Err(ScalarParseError::Empty);
        }
        if let Some((n, d)) = t.split_once('/') {
            let num = parse_decimal(n.trim()).ok_or_else(|| ScalarParseError::Invalid(s.into()))?;
            let den = parse_decimal(d.trim()).ok_or_else(|| ScalarParseError::Invalid(s.into()))?;
            if den.is_zero() {
                return Err(ScalarParseError::ZeroDenominator(s.into()));
            }
            return Ok(Scalar(num / den));
        }
        parse_decimal(t)
            .map(Scalar)
            .ok_or_else(|| ScalarParseError::Invalid(s.into()))
    }
}

fn parse_decimal(s: &str) -> Option<BigRational> {
    let (neg, body) = match s.as_bytes().first()? {
        b'-' => (true, &s[1..]),
        b'+' => (false, &s[1..]),
        _ => (false, s),
    };
    let (int_part, frac_part) = match body.split_once('.') {
        Some((i, f)) => (i, f),
        None => (body, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.bytes().all(|b| b.is_ascii_digit()) || !frac_part.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let numer: BigInt = if digits.is_empty() {
        BigInt::zero()
    } else {
        digits.parse().ok()?
    };
    let denom = BigInt::from(10u32).pow(frac_part.len() as u32);
    let r = BigRational::new(numer, denom);
    Some(if neg { -r } else { r })
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_integer() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl fmt::Debug for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl Serialize for Scalar {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Scalar {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl From<i64> for Scalar {
    fn from(n: i64) -> Self {
        Scalar::from_int(n)
    }
}

impl From<BigRational> for Scalar {
    fn from(r: BigRational) -> Self {
        Scalar(r)
    }
}

macro_rules! binop {
    ($tr:ident, $method:ident) => {
        impl $tr<Scalar> for Scalar {
            type Output = Scalar;
            fn $method(self, rhs: Scalar) -> Scalar {
                Scalar($tr::$method(self.0, rhs.0))
            }
        }
        impl<'a> $tr<&'a Scalar> for Scalar {
            type Output = Scalar;
            fn $method(self, rhs: &'a Scalar) -> Scalar {
                Scalar($tr::$method(self.0, &rhs.0))
            }
        }
        impl<'a> $tr<Scalar> for &'a Scalar {
            type Output = Scalar;
            fn $method(self, rhs: Scalar) -> Scalar {
                Scalar($tr::$method(&self.0, rhs.0))
            }
        }
        impl<'a, 'b> $tr<&'b Scalar> for &'a Scalar {
            type Output = Scalar;
            fn $method(self, rhs: &'b Scalar) -> Scalar {
                Scalar($tr::$method(&self.0, &rhs.0))
            }
        }
    };
}

binop!(Add, add);
binop!(Sub, sub);
binop!(Mul, mul);
binop!(Div, div);

impl AddAssign<&Scalar> for Scalar {
    fn add_assign(&mut self, rhs: &Scalar) {
        self.0 += &rhs.0;
    }
}

impl AddAssign<Scalar> for Scalar {
    fn add_assign(&mut self, rhs: Scalar) {
        self.0 += rhs.0;
    }
}

impl SubAssign<&Scalar> for Scalar {
    fn sub_assign(&mut self, rhs: &Scalar) {
        self.0 -= &rhs.0;
    }
}

impl Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        Scalar(-self.0)
    }
}

impl Neg for &Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        Scalar(-&self.0)
    }
}

impl Sum for Scalar {
    fn sum<I: Iterator<Item = Scalar>>(iter: I) -> Scalar {
        iter.fold(Scalar::zero(), |acc, x| acc + x)
    }
}

impl<'a> Sum<&'a Scalar> for Scalar {
    fn sum<I: Iterator<Item = &'a Scalar>>(iter: I) -> Scalar {
        iter.fold(Scalar::zero(), |acc, x| acc + x)
    }
}

/// Compares `a/b` with `c/d` for nonnegative numerators and positive denominators by
/// cross-multiplication.
pub fn cmp_ratio(a: &Scalar, b: &Scalar, c: &Scalar, d: &Scalar) -> Ordering {
    (a * d).cmp(&(c * b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn s(x: &str) -> Scalar {
        x.parse().unwrap()
    }

    #[test]
    fn parses_decimals_exactly() {
        assert_eq!(s("4.4"), Scalar::ratio(22, 5));
        assert_eq!(s("-0.05"), Scalar::ratio(-1, 20));
        assert_eq!(s(".5"), Scalar::ratio(1, 2));
        assert_eq!(s("7."), Scalar::from_int(7));
        assert_eq!(s("22/5"), Scalar::ratio(22, 5));
        assert_eq!(s(" 3 / 6 "), Scalar::ratio(1, 2));
        assert_eq!(s("0.1/0.4"), Scalar::ratio(1, 4));
    }

    #[test]
    fn square_roots() {
        assert_eq!(s("1/400").exact_sqrt(), Some(s("1/20")));
        assert_eq!(s("0").exact_sqrt(), Some(s("0")));
        assert_eq!(s("0.05").exact_sqrt(), None);
        assert_eq!(s("-4").exact_sqrt(), None);
    }

    #[test]
    fn rejects_garbage() {
        assert!("".parse::<Scalar>().is_err());
        assert!("abc".parse::<Scalar>().is_err());
        assert!("1.2.3".parse::<Scalar>().is_err());
        assert!("-".parse::<Scalar>().is_err());
        assert!(".".parse::<Scalar>().is_err());
        assert!("1e5".parse::<Scalar>().is_err());
        assert_eq!(
            "1/0".parse::<Scalar>(),
            Err(ScalarParseError::ZeroDenominator("1/0".into()))
        );
    }

    #[test]
    fn display_is_lowest_terms() {
        assert_eq!(Scalar::ratio(4, -8).to_string(), "-1/2");
        assert_eq!(Scalar::ratio(6, 3).to_string(), "2");
        assert_eq!(Scalar::ratio(45, 44).to_decimal_string(4), "1.0227");
        assert_eq!(Scalar::ratio(-1, 3).to_decimal_string(2), "-0.33");
    }

    #[test]
    fn dyadic_floor_bounds() {
        assert_eq!(Scalar::ratio(3, 10).dyadic_floor(), Scalar::ratio(1, 4));
        assert_eq!(Scalar::from_int(5).dyadic_floor(), Scalar::one());
    }

    fn arb_scalar() -> impl Strategy<Value = Scalar> {
        (-1000i64..1000, 1i64..200).prop_map(|(n, d)| Scalar::ratio(n, d))
    }

    proptest! {
        #[test]
        fn field_axioms(a in arb_scalar(), b in arb_scalar(), c in arb_scalar()) {
            prop_assert_eq!(&a + &b, &b + &a);
            prop_assert_eq!(&a * &b, &b * &a);
            prop_assert_eq!((&a + &b) + &c, &a + (&b + &c));
            prop_assert_eq!((&a * &b) * &c, &a * (&b * &c));
            prop_assert_eq!(&a * (&b + &c), &a * &b + &a * &c);
            prop_assert_eq!(&a - &a, Scalar::zero());
            if !b.is_zero() {
                prop_assert_eq!((&a / &b) * &b, a.clone());
            }
        }

        #[test]
        fn string_round_trip(a in arb_scalar()) {
            prop_assert_eq!(a.to_string().parse::<Scalar>().unwrap(), a);
        }

        #[test]
        fn lowest_terms(a in arb_scalar()) {
            prop_assert!(a.denom().is_positive());
            prop_assert!(num::Integer::gcd(a.numer(), a.denom()).is_one());
        }
    }
}
