//! Floating-point abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign};
use rand::distr::uniform::SampleUniform;
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Real scalar type used for states, actions, genome constants and fitness
/// values. Implemented for `f32` and `f64`.
pub trait Scalar:
    Float
    + FromPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + SampleUniform
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Converts an `f64` literal into this type.
    #[inline]
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// `true` when every component is finite.
pub fn all_finite<F: Scalar>(values: &[F]) -> bool {
    values.iter().all(|v| v.is_finite())
}
