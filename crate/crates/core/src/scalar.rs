//! Scalar abstraction: every numeric routine in this crate is generic over a
//! floating-point type. `f64` is the type the file formats and the CLI commit
//! to; `f32` works for the in-memory math at reduced accuracy.

use num_traits::{Float, FromPrimitive};

/// Floating-point scalar usable for grid densities: `f32` or `f64`.
pub trait Scalar: Float + FromPrimitive + rustfft::FftNum + std::iter::Sum<Self> {}

impl<T> Scalar for T where T: Float + FromPrimitive + rustfft::FftNum + std::iter::Sum<Self> {}

/// Convert an `f64` literal into the scalar type.
#[inline]
pub(crate) fn lit<T: Scalar>(x: f64) -> T {
    T::from_f64(x).expect("finite f64 literal must convert")
}
