//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Real floating-point scalar underlying all operators and scores.
///
/// Implemented for `f32` and `f64`. The associated tolerances scale with
/// the precision of the type so the same code path can validate inputs at
/// either width.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Default
    + Debug
    + Display
    + LowerExp
    + Sum
    + Send
    + Sync
    + 'static
{
    /// Slack allowed on the smallest eigenvalue of a nominally PSD operator.
    fn psd_tolerance() -> Self;
    /// Slack allowed on Hermitian symmetry and POVM completeness checks.
    fn structure_tolerance() -> Self;

    fn of(value: f64) -> Self {
        Self::from_f64(value).expect("f64 constant representable")
    }

    fn of_usize(value: usize) -> Self {
        Self::from_usize(value).expect("usize representable")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite scalar")
    }
}

impl Real for f64 {
    fn psd_tolerance() -> Self {
        1e-10
    }
    fn structure_tolerance() -> Self {
        1e-12
    }
}

impl Real for f32 {
    fn psd_tolerance() -> Self {
        1e-4
    }
    fn structure_tolerance() -> Self {
        1e-5
    }
}

/// `α = ½(1 + 1/√2)`, the optimal CHSH winning probability.
pub fn alpha<T: Real>() -> T {
    (T::one() + T::FRAC_1_SQRT_2()) / T::of(2.0)
}

/// Gram off-diagonal bound `β = (2 + √2 + √(4√2 − 2)) / 8 ≈ 0.66581`.
pub fn beta<T: Real>() -> T {
    let two = T::of(2.0);
    let sqrt2 = T::SQRT_2();
    (two + sqrt2 + (T::of(4.0) * sqrt2 - two).sqrt()) / T::of(8.0)
}

/// Exhaustive-search penalty threshold `β' = (4 − √2) / 4 ≈ 0.64644`.
pub fn beta_prime<T: Real>() -> T {
    (T::of(4.0) - T::SQRT_2()) / T::of(4.0)
}
