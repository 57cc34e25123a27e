//! Numeric abstraction shared by every solver in the crate.
//!
//! Algorithms are written once against [`Scalar`] and instantiated for
//! `f32`, `f64` and exact rationals. Tolerances are expressed as `f64`
//! literals and converted with [`Scalar::lit`].

use num_rational::Ratio;
use num_traits::{FromPrimitive, Num, NumAssign, Signed, ToPrimitive};
use std::fmt::{Debug, Display};

pub trait Scalar:
    Copy
    + Debug
    + Display
    + PartialOrd
    + Num
    + NumAssign
    + Signed
    + FromPrimitive
    + ToPrimitive
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` constant. Panics only if the value is not representable,
    /// which never happens for the finite constants used in this crate.
    fn lit(v: f64) -> Self {
        Self::from_f64(v).unwrap_or_else(|| panic!("constant {v} not representable"))
    }

    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).unwrap_or_else(|| panic!("integer {n} not representable"))
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn max_of(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    fn min_of(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }

    fn is_finite_value(self) -> bool;

    /// True for arithmetic without rounding error.
    fn is_exact() -> bool;
}

impl Scalar for f64 {
    fn is_finite_value(self) -> bool {
        self.is_finite()
    }
    fn is_exact() -> bool {
        false
    }
}

impl Scalar for f32 {
    fn is_finite_value(self) -> bool {
        self.is_finite()
    }
    fn is_exact() -> bool {
        false
    }
}

impl Scalar for Ratio<i64> {
    fn is_finite_value(self) -> bool {
        true
    }
    fn is_exact() -> bool {
        true
    }
}

impl Scalar for Ratio<i128> {
    fn is_finite_value(self) -> bool {
        true
    }
    fn is_exact() -> bool {
        true
    }
}

/// Cast between scalar types through `f64`.
pub fn cast<S: Scalar, T: Scalar>(v: S) -> T {
    T::lit(v.to_f64_lossy())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_literals_round_trip() {
        let half: Ratio<i64> = Scalar::lit(0.5);
        assert_eq!(half, Ratio::new(1, 2));
        let r: Ratio<i128> = Scalar::lit(0.25);
        assert_eq!(r, Ratio::new(1, 4));
    }

    #[test]
    fn max_min_helpers() {
        assert_eq!(2.0f64.max_of(3.0), 3.0);
        assert_eq!(2.0f64.min_of(3.0), 2.0);
        assert!(!<f64 as Scalar>::is_exact());
        assert!(<Ratio<i64> as Scalar>::is_exact());
    }
}
