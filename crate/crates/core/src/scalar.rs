use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar the numeric core is generic over: f32 or f64.
///
/// Counts, dates and categorical data stay concrete; everything downstream
/// of them (rates, survival estimates, likelihoods) is parameterised on this
/// trait so the same code runs in single or double precision. Single
/// precision is adequate for unit-scale covariates; raw calendar-year
/// columns need f64 headroom in the baseline-hazard exponentials.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossy conversion from f64, for tabulated constants.
    fn from_f64_lossy(x: f64) -> Self {
        Self::from_f64(x).expect("f64 constant representable in scalar type")
    }

    /// Exact-enough conversion from an integer count.
    fn from_count(n: u64) -> Self {
        Self::from_u64(n).unwrap_or_else(Self::infinity)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
