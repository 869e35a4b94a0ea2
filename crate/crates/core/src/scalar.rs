//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_traits::{Float, FloatConst, FromPrimitive};

/// A real floating-point scalar (`f32` or `f64`).
pub trait Scalar:
    Float + FloatConst + FromPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal. Every `Float` type can represent (a rounding of) any `f64`.
    #[inline]
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Minimal field-like arithmetic used by the closed-form ODE formulas, so the same code
/// can run on plain scalars and on jets (for chain-rule derivatives).
pub trait Ring:
    Clone
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    /// A constant of the same kind as `self` (same jet dimension, for jets).
    fn lift(&self, c: f64) -> Self;

    /// The plain value, as `f64`.
    fn real(&self) -> f64;
}

macro_rules! ring_for_float {
    ($($t:ty),*) => {$(
        impl Ring for $t {
            #[inline]
            fn lift(&self, c: f64) -> Self {
                c as $t
            }
            #[inline]
            fn real(&self) -> f64 {
                *self as f64
            }
        }
    )*};
}
ring_for_float!(f32, f64);
