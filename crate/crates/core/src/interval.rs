//! Closed intervals with exact rational endpoints.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::Rational;

/// Serde adapter writing rationals as `"p/q"` strings.
pub mod rat_serde {
    use std::str::FromStr;

    use serde::{de::Error as _, Deserialize, Deserializer, Serializer};

    use crate::Rational;

    pub fn serialize<S: Serializer>(value: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&value.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let text = String::deserialize(d)?;
        Rational::from_str(&text).map_err(D::Error::custom)
    }
}

/// `[lo, hi]` with `lo <= hi`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatInterval {
    #[serde(with = "rat_serde")]
    pub lo: Rational,
    #[serde(with = "rat_serde")]
    pub hi: Rational,
}

impl RatInterval {
    pub fn new(lo: Rational, hi: Rational) -> Self {
        assert!(lo <= hi, "interval endpoints out of order: {lo} > {hi}");
        RatInterval { lo, hi }
    }

    pub fn point(value: Rational) -> Self {
        RatInterval {
            lo: value.clone(),
            hi: value,
        }
    }

    pub fn zero() -> Self {
        Self::point(Rational::zero())
    }

    /// Symmetric interval `[-r, r]`.
    pub fn symmetric(radius: Rational) -> Self {
        assert!(!radius.is_negative());
        RatInterval {
            lo: -radius.clone(),
            hi: radius,
        }
    }

    pub fn width(&self) -> Rational {
        &self.hi - &self.lo
    }

    pub fn center(&self) -> Rational {
        (&self.lo + &self.hi) / Rational::from_integer(2.into())
    }

    pub fn contains(&self, value: &Rational) -> bool {
        &self.lo <= value && value <= &self.hi
    }

    pub fn contains_interval(&self, other: &RatInterval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn intersects(&self, other: &RatInterval) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    /// Largest `|x - y|` over `x ∈ self`, `y ∈ other`.
    pub fn max_distance(&self, other: &RatInterval) -> Rational {
        let a = (&self.hi - &other.lo).abs();
        let b = (&other.hi - &self.lo).abs();
        if a > b {
            a
        } else {
            b
        }
    }

    /// Multiplies by an exact scalar.
    pub fn scale(&self, k: &Rational) -> RatInterval {
        let a = &self.lo * k;
        let b = &self.hi * k;
        if a <= b {
            RatInterval { lo: a, hi: b }
        } else {
            RatInterval { lo: b, hi: a }
        }
    }

    pub fn to_f64_pair(&self) -> (f64, f64) {
        (
            self.lo.to_f64().unwrap_or(f64::NAN),
            self.hi.to_f64().unwrap_or(f64::NAN),
        )
    }
}

impl Add for &RatInterval {
    type Output = RatInterval;
    fn add(self, rhs: &RatInterval) -> RatInterval {
        RatInterval {
            lo: &self.lo + &rhs.lo,
            hi: &self.hi + &rhs.hi,
        }
    }
}

impl Add for RatInterval {
    type Output = RatInterval;
    fn add(self, rhs: RatInterval) -> RatInterval {
        &self + &rhs
    }
}

impl Neg for RatInterval {
    type Output = RatInterval;
    fn neg(self) -> RatInterval {
        RatInterval {
            lo: -self.hi,
            hi: -self.lo,
        }
    }
}

impl Sub for &RatInterval {
    type Output = RatInterval;
    fn sub(self, rhs: &RatInterval) -> RatInterval {
        RatInterval {
            lo: &self.lo - &rhs.hi,
            hi: &self.hi - &rhs.lo,
        }
    }
}

impl Mul for &RatInterval {
    type Output = RatInterval;
    fn mul(self, rhs: &RatInterval) -> RatInterval {
        let products = [
            &self.lo * &rhs.lo,
            &self.lo * &rhs.hi,
            &self.hi * &rhs.lo,
            &self.hi * &rhs.hi,
        ];
        let lo = products.iter().min().cloned().unwrap();
        let hi = products.iter().max().cloned().unwrap();
        RatInterval { lo, hi }
    }
}

impl fmt::Display for RatInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

/// Measure of a cylinder set, bracketed by exact rationals.
///
/// `conditioning_level` is the tower depth `L` at which the set was resolved
/// into equal-measure levels; everything beyond `L` contributes only through
/// the certified width.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasureInterval {
    #[serde(with = "rat_serde")]
    pub lower: Rational,
    #[serde(with = "rat_serde")]
    pub upper: Rational,
    pub conditioning_level: usize,
}

impl MeasureInterval {
    pub fn as_interval(&self) -> RatInterval {
        RatInterval::new(self.lower.clone(), self.upper.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    fn r(p: i64, q: i64) -> Rational {
        Rational::new(BigInt::from(p), BigInt::from(q))
    }

    #[test]
    fn scale_by_negative_swaps_endpoints() {
        let i = RatInterval::new(r(1, 3), r(1, 2));
        let s = i.scale(&r(-2, 1));
        assert_eq!(s, RatInterval::new(r(-1, 1), r(-2, 3)));
    }

    #[test]
    fn product_covers_sign_changes() {
        let a = RatInterval::new(r(-1, 1), r(2, 1));
        let b = RatInterval::new(r(-3, 1), r(1, 1));
        assert_eq!(&a * &b, RatInterval::new(r(-6, 1), r(3, 1)));
    }

    #[test]
    fn max_distance_is_worst_case() {
        let a = RatInterval::new(r(0, 1), r(1, 1));
        let b = RatInterval::point(r(3, 1));
        assert_eq!(a.max_distance(&b), r(3, 1));
        assert_eq!(b.max_distance(&a), r(3, 1));
    }

    #[test]
    fn serde_uses_fraction_strings() {
        let i = RatInterval::new(r(1, 3), r(1, 2));
        let json = serde_json::to_string(&i).unwrap();
        assert_eq!(json, r#"{"lo":"1/3","hi":"1/2"}"#);
        let back: RatInterval = serde_json::from_str(&json).unwrap();
        assert_eq!(back, i);
    }
}
