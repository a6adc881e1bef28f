//! Scalar standard-Gaussian helpers shared by every risk formula.
//!
//! The cdf goes through `erfc` so the lower tail keeps full relative
//! precision; tail expressions elsewhere subtract near-equal terms and would
//! otherwise cancel. Outside `|t| > 40` the cdf saturates to exactly 0/1,
//! which keeps the `gamma -> 0` and `gamma -> inf` limits of the dual
//! formulas free of NaNs.

use crate::error::{Error, Result};

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
const SATURATION: f64 = 40.0;

/// A probability in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Probability(f64);

impl Probability {
    pub fn new(value: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::InvalidInput(format!(
                "probability out of [0, 1]: {value}"
            )));
        }
        Ok(Self(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl From<Probability> for f64 {
    fn from(p: Probability) -> f64 {
        p.0
    }
}

/// Standard normal cdf `Phi(t)`.
pub fn std_normal_cdf(t: f64) -> Probability {
    Probability(cdf(t))
}

/// Standard normal density `phi(t) = exp(-t^2/2) / sqrt(2 pi)`.
pub fn std_normal_pdf(t: f64) -> f64 {
    (-0.5 * t * t).exp() * INV_SQRT_2PI
}

/// Raw `f64` cdf used internally by the risk formulas.
pub(crate) fn cdf(t: f64) -> f64 {
    if t < -SATURATION {
        return 0.0;
    }
    if t > SATURATION {
        return 1.0;
    }
    // Phi(t) = erfc(-t / sqrt(2)) / 2; erfc of a positive argument is the
    // cancellation-free branch, so the lower tail is exact to roundoff.
    0.5 * libm::erfc(-t * std::f64::consts::FRAC_1_SQRT_2)
}
