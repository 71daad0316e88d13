//! Numeric traits the scoring and search code is generic over.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_rational::Ratio;
use num_traits::{Float, FromPrimitive, Num, NumAssign};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Real-valued score type used by suspiciousness and commit scoring: f32 or f64.
pub trait Scalar:
    Float
    + FromPrimitive
    + NumAssign
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable as float")
    }

    fn from_config(x: f64) -> Self {
        Self::from_f64(x).expect("configuration value representable")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Non-negative weight for bisection and ranking arithmetic.
///
/// Unlike [`Scalar`] this admits exact types (integers, rationals), so the
/// search logic can be checked without rounding noise.
pub trait Weight: Num + Copy + PartialOrd + Debug + Send + Sync {
    /// Two pivot imbalances closer than this are treated as equal.
    ///
    /// Exact types return zero. Floating types scale machine epsilon by the
    /// total mass and the number of summands, since prefix sums of equal
    /// weights need not be bit-identical.
    fn tie_tolerance(_total: Self, _terms: usize) -> Self {
        Self::zero()
    }

    fn abs_diff(self, other: Self) -> Self {
        if self >= other {
            self - other
        } else {
            other - self
        }
    }
}

impl Weight for f32 {
    fn tie_tolerance(total: Self, terms: usize) -> Self {
        total.abs() * f32::EPSILON * 4.0 * (terms.max(1) as f32)
    }
}

impl Weight for f64 {
    fn tie_tolerance(total: Self, terms: usize) -> Self {
        total.abs() * f64::EPSILON * 4.0 * (terms.max(1) as f64)
    }
}

impl Weight for u32 {}
impl Weight for u64 {}
impl Weight for i64 {}
impl Weight for usize {}
impl Weight for Ratio<i64> {}
impl Weight for Ratio<i128> {}
