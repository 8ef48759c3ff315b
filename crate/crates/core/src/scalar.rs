//! Scalar abstraction for the numeric kernels.
//!
//! Everything float-valued in this crate is generic over [`Real`]; the crate
//! root re-exports f64 aliases for the common concrete types. Exact hull
//! geometry does not go through this trait, it uses arbitrary-precision
//! rationals instead.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};
use rand::distributions::Open01;
use rand::Rng;
use rand_distr::{Beta, Distribution, StandardNormal};

pub trait Real:
    Float + FloatConst + FromPrimitive + NumAssign + Sum + Send + Sync + Debug + Display + 'static
{
    /// Shorthand for lossy conversion from f64 constants.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 constant must convert")
    }

    fn to_f64_lossy(self) -> f64;
}

impl Real for f32 {
    fn to_f64_lossy(self) -> f64 {
        self as f64
    }
}

impl Real for f64 {
    fn to_f64_lossy(self) -> f64 {
        self
    }
}

/// Scalars the stochastic kernels can draw; keeps rand_distr trait bounds out
/// of caller signatures.
pub trait SampleReal: Real {
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;
    fn open01<R: Rng + ?Sized>(rng: &mut R) -> Self;
    fn beta<R: Rng + ?Sized>(rng: &mut R, a: Self, b: Self) -> Self;
}

macro_rules! impl_sample_real {
    ($t:ty) => {
        impl SampleReal for $t {
            fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
                StandardNormal.sample(rng)
            }

            fn open01<R: Rng + ?Sized>(rng: &mut R) -> Self {
                Open01.sample(rng)
            }

            fn beta<R: Rng + ?Sized>(rng: &mut R, a: Self, b: Self) -> Self {
                Beta::new(a, b).expect("beta shape parameters must be positive").sample(rng)
            }
        }
    };
}

impl_sample_real!(f32);
impl_sample_real!(f64);
