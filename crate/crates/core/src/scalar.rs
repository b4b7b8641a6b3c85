//! Scalar abstraction: every numeric routine in this crate is generic over a
//! floating-point type implementing [`Real`].

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

/// The scalar type the whole engine is generic over. `f32` and `f64` qualify;
/// the shipped type aliases and the CLI use `f64`.
pub trait Real:
    Float + FloatConst + NumAssign + FromPrimitive + Debug + Display + Default + Send + Sync + 'static
{
}

impl<T> Real for T where
    T: Float
        + FloatConst
        + NumAssign
        + FromPrimitive
        + Debug
        + Display
        + Default
        + Send
        + Sync
        + 'static
{
}

/// Converts an `f64` literal into the working scalar type.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("literal not representable in scalar type")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lit_roundtrips_f64() {
        let x: f64 = lit(0.125);
        assert_eq!(x, 0.125);
        let y: f32 = lit(0.5);
        assert_eq!(y, 0.5f32);
    }
}
