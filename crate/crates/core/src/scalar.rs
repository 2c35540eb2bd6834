//! Floating-point abstraction shared by the numeric modules.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Real scalar the index arithmetic is generic over.
///
/// Implemented for `f32` and `f64`. Raw indicator values are stored as `f64`
/// and converted on entry to the numeric pipeline.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal or raw value into this scalar.
    fn of(value: f64) -> Self {
        Self::from_f64(value).expect("f64 converts to every float scalar")
    }

    /// Converts an element count into this scalar.
    fn of_count(count: usize) -> Self {
        Self::from_usize(count).expect("count converts to every float scalar")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
