//! Scalar abstraction shared by every numerical module.
//!
//! All geometry, constitutive laws and fluxes are written against [`Scalar`]
//! so the same code runs in `f32` and `f64`. Robust predicates and the sparse
//! direct factorization always work in `f64`, which represents every `f32`
//! exactly.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + NumAssign + Default + Debug + Display + Sum + Send + Sync + 'static
{
    /// Converts an `f64` literal into this type.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    #[inline]
    fn half() -> Self {
        Self::lit(0.5)
    }

    #[inline]
    fn two() -> Self {
        Self::lit(2.0)
    }

    #[inline]
    fn three() -> Self {
        Self::lit(3.0)
    }

    /// Clamps into `[lo, hi]`.
    #[inline]
    fn clamp_to(self, lo: Self, hi: Self) -> Self {
        self.max(lo).min(hi)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literals_round_trip() {
        assert_eq!(f32::lit(0.25), 0.25f32);
        assert_eq!(f64::three(), 3.0);
        assert_eq!(1.7f64.clamp_to(0.0, 1.0), 1.0);
    }
}
