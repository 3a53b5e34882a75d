use std::fmt::{Debug, Display, LowerExp};

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Real scalar the solvers are written against. Implemented for `f32` and `f64`.
pub trait Scalar:
    RealField + Copy + FromPrimitive + ToPrimitive + Display + Debug + LowerExp + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn is_finite_value(self) -> bool {
        self.to_f64_lossy().is_finite()
    }
}

impl Scalar for f64 {}
impl Scalar for f32 {}
