//! Coordinate arithmetic abstraction: `f64` fast path and exact rationals.
//!
//! All parameter values of interest are dyadic, so geometric predicates on
//! branch domains, image polygons and singularity lines can be decided
//! exactly in rational arithmetic. The float path uses a fixed snapping
//! tolerance instead; rationals snap at zero.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};

/// Exact rational coordinate type.
pub type Rational = num_rational::BigRational;

/// Scalar suitable for planar geometry: ring/field ops plus order, exactness
/// flag and a snapping tolerance for degeneracy decisions.
pub trait Scalar:
    Clone
    + PartialEq
    + PartialOrd
    + Debug
    + std::fmt::Display
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + 'static
{
    /// True when predicates are exact and `snap()` is zero.
    const EXACT: bool;

    fn zero() -> Self;
    fn one() -> Self;
    fn from_ratio(num: i64, den: i64) -> Self;
    fn to_f64(&self) -> f64;
    fn abs(&self) -> Self;
    /// Coordinates closer than this are identified.
    fn snap() -> Self;

    fn is_zero_snapped(&self) -> bool {
        self.abs() <= Self::snap()
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn abs(&self) -> Self {
        f64::abs(*self)
    }
    fn snap() -> Self {
        1e-12
    }
}

impl Scalar for Rational {
    const EXACT: bool = true;

    fn zero() -> Self {
        <Rational as Zero>::zero()
    }
    fn one() -> Self {
        <Rational as num_traits::One>::one()
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        Rational::new(BigInt::from(num), BigInt::from(den))
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).expect("rational out of f64 range")
    }
    fn abs(&self) -> Self {
        Signed::abs(self)
    }
    fn snap() -> Self {
        <Rational as Zero>::zero()
    }
}

/// Exact fraction on `i128` with lazy reduction: operands are reduced only
/// when a product could overflow. Orders of magnitude faster than
/// [`Rational`] for shallow geometric predicate chains (every operation on
/// `Rational` runs a big-integer gcd).
#[derive(Debug, Clone, Copy)]
pub struct Ratio128 {
    num: i128,
    den: i128, // > 0
}

impl Ratio128 {
    pub fn new(num: i128, den: i128) -> Self {
        debug_assert!(den != 0);
        let (num, den) = if den < 0 { (-num, -den) } else { (num, den) };
        Self { num, den }
    }

    fn bits(v: i128) -> u32 {
        128 - v.unsigned_abs().leading_zeros()
    }

    fn reduce(&mut self) {
        let g = gcd_i128(self.num.unsigned_abs(), self.den.unsigned_abs()) as i128;
        if g > 1 {
            self.num /= g;
            self.den /= g;
        }
    }

    /// Reduces the operands when their product could overflow.
    fn guard(a: &mut Self, b: &mut Self) {
        if Self::bits(a.num).max(Self::bits(a.den)) + Self::bits(b.num).max(Self::bits(b.den))
            > 120
        {
            a.reduce();
            b.reduce();
        }
    }
}

fn gcd_i128(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a.max(1)
}

impl PartialEq for Ratio128 {
    fn eq(&self, other: &Self) -> bool {
        let (mut a, mut b) = (*self, *other);
        Ratio128::guard(&mut a, &mut b);
        a.num * b.den == b.num * a.den
    }
}

impl PartialOrd for Ratio128 {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        let (mut a, mut b) = (*self, *other);
        Ratio128::guard(&mut a, &mut b);
        (a.num * b.den).partial_cmp(&(b.num * a.den))
    }
}

impl std::fmt::Display for Ratio128 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut r = *self;
        r.reduce();
        if r.den == 1 {
            write!(f, "{}", r.num)
        } else {
            write!(f, "{}/{}", r.num, r.den)
        }
    }
}

impl Add for Ratio128 {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        let (mut a, mut b) = (self, rhs);
        Ratio128::guard(&mut a, &mut b);
        Self::new(a.num * b.den + b.num * a.den, a.den * b.den)
    }
}

impl Sub for Ratio128 {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl Mul for Ratio128 {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let (mut a, mut b) = (self, rhs);
        Ratio128::guard(&mut a, &mut b);
        Self::new(a.num * b.num, a.den * b.den)
    }
}

impl Div for Ratio128 {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        debug_assert!(rhs.num != 0);
        self * Self::new(rhs.den, rhs.num)
    }
}

impl Neg for Ratio128 {
    type Output = Self;
    fn neg(self) -> Self {
        Self {
            num: -self.num,
            den: self.den,
        }
    }
}

impl Scalar for Ratio128 {
    const EXACT: bool = true;

    fn zero() -> Self {
        Self { num: 0, den: 1 }
    }
    fn one() -> Self {
        Self { num: 1, den: 1 }
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        Self::new(num as i128, den as i128)
    }
    fn to_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }
    fn abs(&self) -> Self {
        Self {
            num: self.num.abs(),
            den: self.den,
        }
    }
    fn snap() -> Self {
        Self::zero()
    }
}

/// Formats a scalar for serialization: `p/q` in exact mode, shortest float
/// representation otherwise.
pub fn format_scalar<S: Scalar>(x: &S) -> String {
    if S::EXACT {
        let s = format!("{}", x);
        if s.contains('/') {
            s
        } else {
            format!("{}/1", s)
        }
    } else {
        format!("{}", x.to_f64())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_roundtrip() {
        let x = <Rational as Scalar>::from_ratio(1, 8);
        assert_eq!(Scalar::to_f64(&x), 0.125);
        assert!(Rational::EXACT);
        assert!(<Rational as Scalar>::snap().is_zero());
    }

    #[test]
    fn float_snap_is_small() {
        assert!(f64::snap() < 1e-10);
        assert!(0.0f64.is_zero_snapped());
    }

    #[test]
    fn ratio128_arithmetic_and_order() {
        let a = Ratio128::from_ratio(1, 3);
        let b = Ratio128::from_ratio(1, 6);
        assert_eq!(a + b, Ratio128::from_ratio(1, 2));
        assert_eq!(a * b, Ratio128::from_ratio(1, 18));
        assert_eq!(a - b, b);
        assert!(b < a);
        assert_eq!(format!("{}", a / b), "2");
        // Deep chains trigger the reduction guard instead of overflowing.
        let mut x = Ratio128::from_ratio(3, 7);
        for _ in 0..200 {
            x = x * Ratio128::from_ratio(7, 3) * Ratio128::from_ratio(3, 7);
        }
        assert_eq!(x, Ratio128::from_ratio(3, 7));
    }
}
