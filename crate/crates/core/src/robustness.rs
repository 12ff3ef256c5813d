//! Critical efficiencies when the near devices only approximately
//! self-test: the δ bound, the shifted penalty and the robust `η*`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{alpha, Real};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobustnessInput<T> {
    pub n_copies: usize,
    /// Gap `ε ≥ 0` between the observed and maximal Bell violation.
    pub epsilon: T,
    /// Self-testing error `f(N, ε) ≥ 0`, supplied by the caller.
    pub f_value: T,
    /// Whether `ε` also lowers the BB84 score linearly.
    pub linear_translation: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RobustEtaStar<T> {
    pub delta: T,
    /// `1/√2 + √δ`.
    pub q: T,
    pub eta_star: T,
}

impl<T: Real> RobustnessInput<T> {
    pub fn validate(&self) -> Result<()> {
        if self.n_copies == 0 {
            return Err(Error::InvalidParameter("N must be at least 1".into()));
        }
        if !(self.f_value >= T::zero()) {
            return Err(Error::InvalidParameter(format!("f = {} must be nonnegative", self.f_value)));
        }
        if !(self.epsilon >= T::zero()) {
            return Err(Error::InvalidParameter(format!("ε = {} must be nonnegative", self.epsilon)));
        }
        Ok(())
    }

    /// Non-fatal inconsistencies: `f > 0` at `ε = 0`.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.epsilon == T::zero() && self.f_value > T::zero() {
            out.push(format!("f = {} is positive although ε = 0", self.f_value));
        }
        out
    }
}

/// `δ = 2^{2N+1}(f² + 2f) + 2^{4N}(f² + 2f)²`.
pub fn delta_bound<T: Real>(input: &RobustnessInput<T>) -> Result<T> {
    input.validate()?;
    let f = input.f_value;
    let g = f * f + T::of(2.0) * f;
    let n = input.n_copies as i32;
    Ok(T::of(2.0).powi(2 * n + 1) * g + T::of(2.0).powi(4 * n) * g * g)
}

/// Robust critical efficiency with `q = 1/√2 + √δ`:
/// `η* = 2^{−N}(1 − 1/√2) / (1 − 1/√2 − √δ)`, with an extra `− ε/α^N` in
/// the denominator under linear translation.
pub fn robust_eta_star<T: Real>(input: &RobustnessInput<T>) -> Result<RobustEtaStar<T>> {
    let delta = delta_bound(input)?;
    robust_eta_star_from_delta(input.n_copies, delta, input.epsilon, input.linear_translation)
}

/// As [`robust_eta_star`] with `δ` given directly.
pub fn robust_eta_star_from_delta<T: Real>(
    n_copies: usize,
    delta: T,
    epsilon: T,
    linear_translation: bool,
) -> Result<RobustEtaStar<T>> {
    if n_copies == 0 {
        return Err(Error::InvalidParameter("N must be at least 1".into()));
    }
    if !(delta >= T::zero()) || !(epsilon >= T::zero()) {
        return Err(Error::InvalidParameter(format!("δ = {delta} and ε = {epsilon} must be nonnegative")));
    }
    let margin = T::one() - T::FRAC_1_SQRT_2();
    let root = delta.sqrt();
    let mut denominator = margin - root;
    if linear_translation {
        denominator = denominator - epsilon / alpha::<T>().powi(n_copies as i32);
    }
    if !(denominator > T::zero()) {
        return Err(Error::RobustnessWindowEmpty(denominator.as_f64()));
    }
    let eta_star = margin / denominator / T::of_usize(1 << n_copies);
    Ok(RobustEtaStar { delta, q: T::FRAC_1_SQRT_2() + root, eta_star })
}

/// `‖F_k‖ − kq = (1 − 1/√2) + k(1/√2 + √δ) − kq`. Independent of `N`.
pub fn robust_gram_bound<T: Real>(_n_copies: usize, clicks: usize, delta: T, q: T) -> Result<T> {
    if clicks == 0 {
        return Err(Error::InvalidParameter("click count must be at least 1".into()));
    }
    if !(delta >= T::zero()) {
        return Err(Error::InvalidParameter(format!("δ = {delta} must be nonnegative")));
    }
    let k = T::of_usize(clicks);
    Ok((T::one() - T::FRAC_1_SQRT_2()) + k * (T::FRAC_1_SQRT_2() + delta.sqrt()) - k * q)
}
