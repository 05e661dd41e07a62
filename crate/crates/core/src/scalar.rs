//! Scalar abstraction: every numeric routine in this crate is generic over
//! [`Scalar`], so the same code runs in `f32` (fast training) and `f64`
//! (gradient oracles, exactness tests).

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating-point scalar used by tensors, losses, replay priorities and
/// environment physics.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + NumAssign + Sum + Default + Debug + Display + Send + Sync + 'static
{
    /// Convert a constant / config value. Panics only for values outside the
    /// type's range, which never holds for the constants used here.
    fn from_f(v: f64) -> Self {
        <Self as FromPrimitive>::from_f64(v).expect("constant representable in scalar type")
    }

    fn from_us(v: usize) -> Self {
        <Self as FromPrimitive>::from_usize(v).expect("count representable in scalar type")
    }

    fn to_f(self) -> f64 {
        self.to_f64().expect("scalar convertible to f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants_round_trip() {
        assert_eq!(f32::from_f(0.5), 0.5f32);
        assert_eq!(f64::from_f(0.99), 0.99f64);
        assert_eq!(f64::from_us(32), 32.0);
    }
}
