//! Scalar abstraction shared by the numeric modules.
//!
//! Everything that is plain arithmetic on study summaries (genetic model,
//! combining rules, distribution functions) is written against [`Real`] so it
//! can be instantiated at `f32` or `f64`. The simulation engines are
//! concrete `f64` code.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Machine-epsilon-scaled tolerance used by iterative special functions.
    const SERIES_EPS: f64;

    /// Complementary error function, accurate in relative terms over the
    /// whole range where the result is representable.
    fn erfc(self) -> Self;

    /// Natural log of the gamma function for positive arguments.
    fn ln_gamma(self) -> Self;

    #[inline]
    fn c(x: f64) -> Self {
        Self::from_f64(x).expect("f64 constant representable")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("count representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite scalar")
    }
}

impl Real for f64 {
    const SERIES_EPS: f64 = 1e-16;

    #[inline]
    fn erfc(self) -> Self {
        libm::erfc(self)
    }

    #[inline]
    fn ln_gamma(self) -> Self {
        libm::lgamma(self)
    }
}

impl Real for f32 {
    const SERIES_EPS: f64 = 1e-8;

    #[inline]
    fn erfc(self) -> Self {
        libm::erfcf(self)
    }

    #[inline]
    fn ln_gamma(self) -> Self {
        libm::lgammaf(self)
    }
}
