// SPDX-License-Identifier: MIT OR Apache-2.0

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating-point scalar used throughout the numeric modules.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossy conversion from `f64`.
    #[inline]
    fn of(v: f64) -> Self {
        <Self as FromPrimitive>::from_f64(v).expect("f64 is representable")
    }

    #[inline]
    fn of_count(n: u64) -> Self {
        <Self as FromPrimitive>::from_u64(n).expect("count is representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }

    /// `x ln x` with `0 ln 0 = 0`.
    #[inline]
    fn xlnx(self) -> Self {
        if self <= Self::zero() {
            Self::zero()
        } else {
            self * self.ln()
        }
    }
}

impl Real for f32 {}
impl Real for f64 {}
