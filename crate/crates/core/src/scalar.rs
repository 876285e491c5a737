//! Scalar abstraction shared by the numeric parts of the pipeline.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::str::FromStr;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point type the feature matrix, forests and reports are computed in: `f32` or `f64`.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + FromStr
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from a count or an index.
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).unwrap_or_else(Self::max_value)
    }

    fn from_f64_lossy(v: f64) -> Self {
        Self::from_f64(v).unwrap_or_else(Self::nan)
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Total order on scalars used for sorting; NaN sorts last.
pub(crate) fn total_cmp<T: Scalar>(a: &T, b: &T) -> std::cmp::Ordering {
    match a.partial_cmp(b) {
        Some(o) => o,
        None => a.is_nan().cmp(&b.is_nan()),
    }
}
