//! Nonnegative rationals extended with a distinguished infinity.

use std::fmt;
use std::ops::{Add, AddAssign, Mul};
use std::str::FromStr;

use crate::rational::{ParseRationalError, Rational};

/// A cost: a finite rational or `Infinity`.
///
/// `Infinity` absorbs addition, and `0 * Infinity = 0`. Finite costs are
/// expected to be nonnegative; structures holding negative entries are
/// reported by [`crate::structure::validate_structure`].
///
/// The derived order places every finite value below `Infinity`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ExtendedRational {
    Finite(Rational),
    Infinity,
}

impl ExtendedRational {
    pub fn zero() -> Self {
        ExtendedRational::Finite(Rational::zero())
    }

    pub fn one() -> Self {
        ExtendedRational::Finite(Rational::one())
    }

    pub fn from_integer(n: i64) -> Self {
        ExtendedRational::Finite(Rational::from_integer(n))
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, ExtendedRational::Finite(_))
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, ExtendedRational::Infinity)
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, ExtendedRational::Finite(r) if r.is_zero())
    }

    pub fn is_positive(&self) -> bool {
        match self {
            ExtendedRational::Finite(r) => r.is_positive(),
            ExtendedRational::Infinity => true,
        }
    }

    pub fn finite(&self) -> Option<&Rational> {
        match self {
            ExtendedRational::Finite(r) => Some(r),
            ExtendedRational::Infinity => None,
        }
    }

    pub fn into_finite(self) -> Option<Rational> {
        match self {
            ExtendedRational::Finite(r) => Some(r),
            ExtendedRational::Infinity => None,
        }
    }

    /// `0` for finite values, `Infinity` otherwise.
    pub fn feas(&self) -> Self {
        match self {
            ExtendedRational::Finite(_) => Self::zero(),
            ExtendedRational::Infinity => ExtendedRational::Infinity,
        }
    }

    pub fn mul_rational(&self, c: &Rational) -> Self {
        match self {
            ExtendedRational::Finite(r) => ExtendedRational::Finite(r * c),
            ExtendedRational::Infinity if c.is_zero() => Self::zero(),
            ExtendedRational::Infinity => ExtendedRational::Infinity,
        }
    }
}

impl Default for ExtendedRational {
    fn default() -> Self {
        Self::zero()
    }
}

impl From<Rational> for ExtendedRational {
    fn from(r: Rational) -> Self {
        ExtendedRational::Finite(r)
    }
}

impl Add<&ExtendedRational> for &ExtendedRational {
    type Output = ExtendedRational;
    fn add(self, rhs: &ExtendedRational) -> ExtendedRational {
        match (self, rhs) {
            (ExtendedRational::Finite(a), ExtendedRational::Finite(b)) => {
                ExtendedRational::Finite(a + b)
            }
            _ => ExtendedRational::Infinity,
        }
    }
}

impl Add for ExtendedRational {
    type Output = ExtendedRational;
    fn add(self, rhs: ExtendedRational) -> ExtendedRational {
        &self + &rhs
    }
}

impl AddAssign<&ExtendedRational> for ExtendedRational {
    fn add_assign(&mut self, rhs: &ExtendedRational) {
        match (&mut *self, rhs) {
            (ExtendedRational::Finite(a), ExtendedRational::Finite(b)) => *a += b,
            _ => *self = ExtendedRational::Infinity,
        }
    }
}

impl Mul<&ExtendedRational> for &ExtendedRational {
    type Output = ExtendedRational;
    fn mul(self, rhs: &ExtendedRational) -> ExtendedRational {
        match (self, rhs) {
            (ExtendedRational::Finite(a), ExtendedRational::Finite(b)) => {
                ExtendedRational::Finite(a * b)
            }
            (ExtendedRational::Finite(a), ExtendedRational::Infinity)
            | (ExtendedRational::Infinity, ExtendedRational::Finite(a))
                if a.is_zero() =>
            {
                ExtendedRational::zero()
            }
            _ => ExtendedRational::Infinity,
        }
    }
}

impl Mul for ExtendedRational {
    type Output = ExtendedRational;
    fn mul(self, rhs: ExtendedRational) -> ExtendedRational {
        &self * &rhs
    }
}

impl std::iter::Sum for ExtendedRational {
    fn sum<I: Iterator<Item = ExtendedRational>>(iter: I) -> Self {
        let mut acc = ExtendedRational::zero();
        for x in iter {
            acc += &x;
        }
        acc
    }
}

impl fmt::Display for ExtendedRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtendedRational::Finite(r) => write!(f, "{r}"),
            ExtendedRational::Infinity => f.write_str("inf"),
        }
    }
}

impl fmt::Debug for ExtendedRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for ExtendedRational {
    type Err = ParseRationalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.trim() == "inf" {
            Ok(ExtendedRational::Infinity)
        } else {
            s.parse().map(ExtendedRational::Finite)
        }
    }
}
