//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::str::FromStr;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating point scalar the kernel and sampling code is generic over.
///
/// Implemented for `f32` and `f64`. Text formats rely on `Display` and
/// `FromStr` round-tripping, which both primitive floats guarantee.
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + FromStr
    + Default
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from `f64`; used for configuration constants.
    #[inline]
    fn of(value: f64) -> Self {
        Self::from_f64(value).expect("f64 is representable in every Real")
    }

    /// Converts a count to the scalar type.
    #[inline]
    fn of_usize(value: usize) -> Self {
        Self::from_usize(value).expect("usize is representable in every Real")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("Real converts to f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}
