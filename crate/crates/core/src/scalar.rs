//! Floating-point abstraction for the probability math.
//!
//! Distributions, mixing, the bias head and the n-gram estimator are written
//! once against [`Scalar`] and instantiated for `f32` and `f64`. The coding
//! pipeline itself always runs in `f64`.

use std::fmt::Debug;
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Sum + Default + Debug + Send + Sync + 'static
{
    /// Tolerance on `|sum(p) - 1|` for a distribution of `len` entries.
    fn sum_tolerance(len: usize) -> Self {
        let floor = Self::from_f64(1e-9).unwrap();
        let accum = Self::epsilon() * Self::from_usize(len.max(1)).unwrap() * Self::from_f64(4.0).unwrap();
        floor.max(accum)
    }

    fn lit(x: f64) -> Self {
        Self::from_f64(x).unwrap()
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
