//! Scalar abstraction shared by every numeric routine in the crate.
//!
//! All metric math is written once against [`Scalar`]; `f64` is the default
//! used by the CLI and the type aliases in the crate root, `f32` works for
//! memory-bound diagonal runs.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;
use std::str::FromStr;

use num_traits::{Float, FromPrimitive, ToPrimitive};

pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + LowerExp
    + FromStr
    + Default
    + Sum
    + Send
    + Sync
    + 'static
{
    /// Tag written into serialized metrics so a file is never read back as
    /// the wrong precision.
    const TYPE_TAG: &'static str;

    fn from_f64_lossy(v: f64) -> Self {
        <Self as FromPrimitive>::from_f64(v).unwrap_or_else(Self::nan)
    }

    fn from_usize_lossy(v: usize) -> Self {
        <Self as FromPrimitive>::from_usize(v).unwrap_or_else(Self::nan)
    }

    fn to_f64_lossy(self) -> f64 {
        ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }

    fn half() -> Self {
        Self::from_f64_lossy(0.5)
    }
}

impl Scalar for f64 {
    const TYPE_TAG: &'static str = "f64";
}

impl Scalar for f32 {
    const TYPE_TAG: &'static str = "f32";
}
