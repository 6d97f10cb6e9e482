//! Scalar abstraction shared by every numeric module.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point scalar the models are generic over: `f32` or `f64`.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Sum + Send + Sync + 'static
{
    /// Converts an `f64` literal into this scalar type.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar representable as f64")
    }

    /// Parses the shortest round-trip text form written by `Display`.
    fn parse_text(s: &str) -> Option<Self>;

    /// `"f32"` or `"f64"`.
    fn type_tag() -> &'static str;
}

impl Real for f32 {
    fn parse_text(s: &str) -> Option<Self> {
        s.trim().parse().ok()
    }

    fn type_tag() -> &'static str {
        "f32"
    }
}

impl Real for f64 {
    fn parse_text(s: &str) -> Option<Self> {
        s.trim().parse().ok()
    }

    fn type_tag() -> &'static str {
        "f64"
    }
}
