//! Scalar abstraction shared by the numeric modules.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Real floating-point scalar: `f32` or `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Send + Sync + 'static
{
    /// Lossy conversion from `f64`, used for literals.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    /// Machine-precision-scaled tolerance used by iterative kernels.
    fn tolerance() -> Self;
}

impl Real for f32 {
    fn tolerance() -> Self {
        1e-6
    }
}

impl Real for f64 {
    fn tolerance() -> Self {
        1e-14
    }
}
