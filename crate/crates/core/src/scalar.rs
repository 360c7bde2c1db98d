//! Scalar abstraction for times, radii and workloads.

use std::fmt::{Debug, Display};
use std::str::FromStr;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Real scalar used for times, radii, durations and workloads: `f32` or `f64`.
///
/// `Display`/`FromStr` must round-trip exactly; both primitive floats print the
/// shortest decimal that parses back to the same value.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Display + Debug + FromStr + Default + Send + Sync + 'static
{
    /// Lossy conversion from `f64`, used for values drawn by the samplers.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("every f64 converts to a float scalar")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("float scalars convert to f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
