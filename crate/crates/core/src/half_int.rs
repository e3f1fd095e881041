//! Exact half-integer quantum numbers.
//!
//! Angular momenta F, F′, m_F, I, J appearing in the hyperfine problem are
//! integers or half-odd-integers. Storing twice the value as an `i32` keeps
//! them exact and hashable; floating-point only enters when a coefficient is
//! finally evaluated.

use std::fmt;
use std::ops::{Add, Neg, Sub};

use crate::float::Float;

/// A half-integer j represented by `2j`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct HalfInt {
    twice: i32,
}

impl HalfInt {
    pub const ZERO: HalfInt = HalfInt { twice: 0 };
    pub const HALF: HalfInt = HalfInt { twice: 1 };
    pub const ONE: HalfInt = HalfInt { twice: 2 };

    /// Construct from twice the value, i.e. `from_twice(3)` is 3/2.
    pub const fn from_twice(twice: i32) -> Self {
        HalfInt { twice }
    }

    pub const fn from_int(n: i32) -> Self {
        HalfInt { twice: 2 * n }
    }

    pub const fn twice(self) -> i32 {
        self.twice
    }

    pub const fn is_integer(self) -> bool {
        self.twice % 2 == 0
    }

    /// The integer value; panics when called on a half-odd-integer.
    pub fn as_int(self) -> i32 {
        assert!(self.is_integer(), "{self} is not an integer");
        self.twice / 2
    }

    pub fn value<F: Float>(self) -> F {
        F::of_i32(self.twice) / F::two()
    }

    /// Multiplicity 2j + 1. Negative j (unphysical) yields a panic.
    pub fn multiplicity(self) -> usize {
        assert!(self.twice >= 0, "negative magnitude {self}");
        (self.twice + 1) as usize
    }

    /// Projections m = -j, -j+1, …, +j.
    pub fn projections(self) -> impl Iterator<Item = HalfInt> {
        let j2 = self.twice;
        (0..=j2.max(0)).map(move |k| HalfInt::from_twice(-j2 + 2 * k))
    }

    /// Whether (a, b, c) satisfy the triangle rule with consistent parity.
    pub fn triangle(a: HalfInt, b: HalfInt, c: HalfInt) -> bool {
        let (a, b, c) = (a.twice, b.twice, c.twice);
        a >= 0 && b >= 0 && c >= 0 && c >= (a - b).abs() && c <= a + b && (a + b + c) % 2 == 0
    }
}

impl Add for HalfInt {
    type Output = HalfInt;
    fn add(self, rhs: HalfInt) -> HalfInt {
        HalfInt::from_twice(self.twice + rhs.twice)
    }
}

impl Sub for HalfInt {
    type Output = HalfInt;
    fn sub(self, rhs: HalfInt) -> HalfInt {
        HalfInt::from_twice(self.twice - rhs.twice)
    }
}

impl Neg for HalfInt {
    type Output = HalfInt;
    fn neg(self) -> HalfInt {
        HalfInt::from_twice(-self.twice)
    }
}

impl fmt::Display for HalfInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.twice / 2)
        } else {
            write!(f, "{}/2", self.twice)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn representation() {
        let j = HalfInt::from_twice(3);
        assert_eq!(j.value::<f64>(), 1.5);
        assert_eq!(j.multiplicity(), 4);
        assert!(!j.is_integer());
        assert_eq!(format!("{j}"), "3/2");
        assert_eq!(format!("{}", HalfInt::from_int(2)), "2");
    }

    #[test]
    fn projections_are_exact() {
        let ms: Vec<i32> = HalfInt::from_twice(3)
            .projections()
            .map(|m| m.twice())
            .collect();
        assert_eq!(ms, vec![-3, -1, 1, 3]);
    }

    #[test]
    fn triangle_rule() {
        let one = HalfInt::ONE;
        let half = HalfInt::HALF;
        assert!(HalfInt::triangle(one, one, HalfInt::from_int(2)));
        assert!(!HalfInt::triangle(one, one, HalfInt::from_int(3)));
        // parity mismatch: 1 ⊗ 1 cannot contain 3/2
        assert!(!HalfInt::triangle(one, one, HalfInt::from_twice(3)));
        assert!(HalfInt::triangle(half, half, one));
    }
}
