//! Arbitrary-precision integers with an inline fast path.
//!
//! Values that fit in an `i64` stay inline; every operation is checked and
//! promotes to a heap `BigInt` on overflow, demoting again when the result fits.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Clone)]
pub enum Int {
    Small(i64),
    Big(Box<BigInt>),
}

impl Int {
    pub const ZERO: Int = Int::Small(0);
    pub const ONE: Int = Int::Small(1);

    fn from_big(b: BigInt) -> Int {
        match b.to_i64() {
            Some(v) => Int::Small(v),
            None => Int::Big(Box::new(b)),
        }
    }

    pub fn to_big(&self) -> BigInt {
        match self {
            Int::Small(v) => BigInt::from(*v),
            Int::Big(b) => (**b).clone(),
        }
    }

    pub fn to_i64(&self) -> Option<i64> {
        match self {
            Int::Small(v) => Some(*v),
            Int::Big(_) => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Int::Small(0))
    }

    pub fn is_one(&self) -> bool {
        matches!(self, Int::Small(1))
    }

    pub fn is_unit(&self) -> bool {
        matches!(self, Int::Small(1) | Int::Small(-1))
    }

    pub fn is_negative(&self) -> bool {
        match self {
            Int::Small(v) => *v < 0,
            Int::Big(b) => b.is_negative(),
        }
    }

    pub fn signum(&self) -> i32 {
        match self {
            Int::Small(v) => v.signum() as i32,
            Int::Big(b) => {
                if b.is_negative() {
                    -1
                } else {
                    1
                }
            }
        }
    }

    pub fn abs(&self) -> Int {
        match self {
            Int::Small(v) => match v.checked_abs() {
                Some(a) => Int::Small(a),
                None => Int::from_big(BigInt::from(*v).abs()),
            },
            Int::Big(b) => Int::from_big(b.abs()),
        }
    }

    /// Quotient rounded toward negative infinity for positive `m`, with
    /// remainder in `[0, |m|)`.
    pub fn div_rem_euclid(&self, m: &Int) -> (Int, Int) {
        assert!(!m.is_zero(), "division by zero");
        if let (Int::Small(a), Int::Small(b)) = (self, m) {
            if let (Some(q), Some(r)) = (a.checked_div_euclid(*b), a.checked_rem_euclid(*b)) {
                return (Int::Small(q), Int::Small(r));
            }
        }
        let a = self.to_big();
        let b = m.to_big();
        let mut r = a.mod_floor(&b.abs());
        if r.is_negative() {
            r += b.abs();
        }
        let q = (a - &r) / b;
        (Int::from_big(q), Int::from_big(r))
    }

    pub fn rem_euclid(&self, m: &Int) -> Int {
        self.div_rem_euclid(m).1
    }

    /// Exact division; panics when `m` does not divide `self`.
    pub fn div_exact(&self, m: &Int) -> Int {
        let (q, r) = self.div_rem_euclid(m);
        assert!(r.is_zero(), "inexact division {self} / {m}");
        q
    }

    pub fn divides(&self, other: &Int) -> bool {
        if self.is_zero() {
            return other.is_zero();
        }
        other.rem_euclid(self).is_zero()
    }

    pub fn gcd(&self, other: &Int) -> Int {
        if let (Int::Small(a), Int::Small(b)) = (self, other) {
            if *a != i64::MIN && *b != i64::MIN {
                return Int::Small(a.gcd(b));
            }
        }
        Int::from_big(self.to_big().gcd(&other.to_big()))
    }

    /// Returns `(g, s, t)` with `g = s*self + t*other`, `g >= 0`.
    ///
    /// When `self` divides `other` the coefficients are `(±1, 0)`, which keeps
    /// echelon rows from growing during reductions.
    pub fn ext_gcd(&self, other: &Int) -> (Int, Int, Int) {
        if !self.is_zero() && self.divides(other) {
            let s = if self.is_negative() { Int::from(-1) } else { Int::ONE };
            return (self.abs(), s, Int::ZERO);
        }
        if !other.is_zero() && other.divides(self) {
            let t = if other.is_negative() { Int::from(-1) } else { Int::ONE };
            return (other.abs(), Int::ZERO, t);
        }
        if let (Int::Small(a), Int::Small(b)) = (self, other) {
            if a.unsigned_abs() < (1u64 << 62) && b.unsigned_abs() < (1u64 << 62) {
                let e = a.extended_gcd(b);
                let (g, s, t) = if e.gcd < 0 { (-e.gcd, -e.x, -e.y) } else { (e.gcd, e.x, e.y) };
                return (Int::Small(g), Int::Small(s), Int::Small(t));
            }
        }
        let e = self.to_big().extended_gcd(&other.to_big());
        let (g, s, t) = if e.gcd.is_negative() { (-e.gcd, -e.x, -e.y) } else { (e.gcd, e.x, e.y) };
        (Int::from_big(g), Int::from_big(s), Int::from_big(t))
    }

    pub fn pow(&self, e: u32) -> Int {
        let mut r = Int::ONE;
        for _ in 0..e {
            r = &r * self;
        }
        r
    }
}

impl Default for Int {
    fn default() -> Self {
        Int::ZERO
    }
}

impl From<i64> for Int {
    fn from(v: i64) -> Self {
        Int::Small(v)
    }
}

impl From<i32> for Int {
    fn from(v: i32) -> Self {
        Int::Small(v as i64)
    }
}

impl From<usize> for Int {
    fn from(v: usize) -> Self {
        Int::from_big(BigInt::from(v))
    }
}

impl From<BigInt> for Int {
    fn from(v: BigInt) -> Self {
        Int::from_big(v)
    }
}

impl PartialEq for Int {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Int::Small(a), Int::Small(b)) => a == b,
            (Int::Big(a), Int::Big(b)) => a == b,
            _ => false,
        }
    }
}

impl Eq for Int {}

impl std::hash::Hash for Int {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        match self {
            Int::Small(v) => v.hash(state),
            Int::Big(b) => b.hash(state),
        }
    }
}

impl Ord for Int {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Int::Small(a), Int::Small(b)) => a.cmp(b),
            _ => self.to_big().cmp(&other.to_big()),
        }
    }
}

impl PartialOrd for Int {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Int {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Int::Small(v) => write!(f, "{v}"),
            Int::Big(b) => write!(f, "{b}"),
        }
    }
}

impl fmt::Debug for Int {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Int {
    type Err = num_bigint::ParseBigIntError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(Int::from_big(BigInt::from_str(s)?))
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident, $checked:ident, $op:tt) => {
        impl<'a> $trait<&'a Int> for &'a Int {
            type Output = Int;
            fn $method(self, rhs: &'a Int) -> Int {
                if let (Int::Small(a), Int::Small(b)) = (self, rhs) {
                    if let Some(v) = a.$checked(*b) {
                        return Int::Small(v);
                    }
                }
                Int::from_big(self.to_big() $op rhs.to_big())
            }
        }
        impl $trait<Int> for Int {
            type Output = Int;
            fn $method(self, rhs: Int) -> Int {
                (&self).$method(&rhs)
            }
        }
        impl<'a> $trait<&'a Int> for Int {
            type Output = Int;
            fn $method(self, rhs: &'a Int) -> Int {
                (&self).$method(rhs)
            }
        }
    };
}

binop!(Add, add, checked_add, +);
binop!(Sub, sub, checked_sub, -);
binop!(Mul, mul, checked_mul, *);

impl AddAssign<&Int> for Int {
    fn add_assign(&mut self, rhs: &Int) {
        *self = &*self + rhs;
    }
}

impl SubAssign<&Int> for Int {
    fn sub_assign(&mut self, rhs: &Int) {
        *self = &*self - rhs;
    }
}

impl Neg for &Int {
    type Output = Int;
    fn neg(self) -> Int {
        match self {
            Int::Small(v) => match v.checked_neg() {
                Some(n) => Int::Small(n),
                None => Int::from_big(-BigInt::from(*v)),
            },
            Int::Big(b) => Int::from_big(-(**b).clone()),
        }
    }
}

impl Neg for Int {
    type Output = Int;
    fn neg(self) -> Int {
        -&self
    }
}

impl Zero for Int {
    fn zero() -> Self {
        Int::ZERO
    }
    fn is_zero(&self) -> bool {
        Int::is_zero(self)
    }
}

impl Serialize for Int {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Int::Small(v) => s.serialize_i64(*v),
            Int::Big(b) => s.serialize_str(&b.to_string()),
        }
    }
}

impl<'de> Deserialize<'de> for Int {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            N(i64),
            S(String),
        }
        match Repr::deserialize(d)? {
            Repr::N(v) => Ok(Int::Small(v)),
            Repr::S(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overflow_promotes_and_demotes() {
        let a = Int::from(i64::MAX);
        let b = &a + &Int::ONE;
        assert!(matches!(b, Int::Big(_)));
        let c = &b - &Int::ONE;
        assert_eq!(c, a);
        assert!(matches!(c, Int::Small(_)));
        let sq = &a * &a;
        assert_eq!(sq.to_big(), BigInt::from(i64::MAX) * BigInt::from(i64::MAX));
    }

    #[test]
    fn euclid_division() {
        let (q, r) = Int::from(-7).div_rem_euclid(&Int::from(3));
        assert_eq!((q, r), (Int::from(-3), Int::from(2)));
        let (q, r) = Int::from(7).div_rem_euclid(&Int::from(-3));
        assert_eq!(r, Int::from(1));
        assert_eq!(&(&q * &Int::from(-3)) + &r, Int::from(7));
    }

    #[test]
    fn ext_gcd_identity() {
        for a in -12i64..=12 {
            for b in -12i64..=12 {
                let (g, s, t) = Int::from(a).ext_gcd(&Int::from(b));
                assert_eq!(g, Int::from(a.gcd(&b)));
                assert_eq!(&(&s * &Int::from(a)) + &(&t * &Int::from(b)), g);
            }
        }
    }

    #[test]
    fn serde_round_trip() {
        let big: Int = "123456789012345678901234567890".parse().unwrap();
        let js = serde_json::to_string(&vec![Int::from(-5), big.clone()]).unwrap();
        let back: Vec<Int> = serde_json::from_str(&js).unwrap();
        assert_eq!(back, vec![Int::from(-5), big]);
    }
}
