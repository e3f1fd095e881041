//! Scalar abstraction for the numerical kernels.

use std::fmt::{Debug, Display};
use std::iter::Sum;

/// Floating-point scalar: `f32` or `f64`.
pub trait Float:
    num_traits::Float
    + num_traits::FloatConst
    + num_traits::FromPrimitive
    + num_traits::NumAssign
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 conversion")
    }

    fn of_i32(n: i32) -> Self {
        Self::from_i32(n).expect("i32 conversion")
    }

    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).expect("usize conversion")
    }

    fn half() -> Self {
        Self::of(0.5)
    }

    fn two() -> Self {
        Self::of(2.0)
    }
}

impl Float for f32 {}
impl Float for f64 {}
