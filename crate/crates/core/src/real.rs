use std::fmt::Debug;
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Scalar type the numeric paths are generic over.
///
/// Inference runs in `f32`; the Jacobian oracles and the trainer run the same
/// code in `f64`.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + Debug + Default + Send + Sync + Sum + 'static
{
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("literal representable")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite real")
    }

    fn cast<U: Real>(self) -> U {
        U::lit(self.as_f64())
    }
}

impl Real for f32 {}
impl Real for f64 {}
