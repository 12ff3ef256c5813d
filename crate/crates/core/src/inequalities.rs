//! Bell functionals evaluated on routed correlations, their ideal values,
//! the jointly-measurable thresholds and the crossing efficiency.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{alpha, beta, Real};
use crate::strategies::{CorrelationTable, RoutedCorrelation};

/// Margin by which a score must exceed its JM threshold to count as a
/// violation.
pub const CROSSING_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Bb84,
    Chsh,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Bb84 => "bb84",
            Family::Chsh => "chsh",
        })
    }
}

impl FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bb84" => Ok(Family::Bb84),
            "chsh" => Ok(Family::Chsh),
            other => Err(Error::InvalidParameter(format!("unknown functional family `{other}`"))),
        }
    }
}

impl Family {
    /// Per-click coefficient of the ideal score: 1 for BB84, `α^N` for CHSH.
    pub fn click_coefficient<T: Real>(self, n_copies: usize) -> T {
        match self {
            Family::Bb84 => T::one(),
            Family::Chsh => alpha::<T>().powi(n_copies as i32),
        }
    }

    /// Penalty range on which the JM threshold is proven: `[1/√2, 1]` for
    /// BB84 and `[α^{N−1}β, α^N)` for CHSH.
    pub fn proven_window<T: Real>(self, n_copies: usize) -> (T, T, bool) {
        match self {
            Family::Bb84 => (T::FRAC_1_SQRT_2(), T::one(), true),
            Family::Chsh => {
                let a = alpha::<T>();
                (a.powi(n_copies as i32 - 1) * beta::<T>(), a.powi(n_copies as i32), false)
            }
        }
    }

    pub fn in_proven_window<T: Real>(self, n_copies: usize, q: T) -> bool {
        let (lo, hi, closed) = self.proven_window::<T>(n_copies);
        q >= lo && (q < hi || (closed && q <= hi))
    }

    /// JM threshold `(c − q)/2^N`.
    pub fn jm_threshold<T: Real>(self, n_copies: usize, q: T) -> T {
        (self.click_coefficient::<T>(n_copies) - q) / T::of_usize(1 << n_copies)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Leg {
    B0,
    B1,
}

fn settings_of(n_copies: usize) -> usize {
    1 << n_copies
}

fn check_settings<T: Real>(table: &CorrelationTable<T>, n_copies: usize) -> Result<()> {
    let expected = settings_of(n_copies);
    for found in [table.n_x, table.n_y] {
        if found != expected {
            return Err(Error::SettingMismatch { expected, found });
        }
    }
    Ok(())
}

/// `N`-product CHSH score `2^{−2N} Σ δ_{x·y = a⊕b} p(a,b|x,y,i)`. On the
/// long path the no-click outcome never wins.
pub fn chsh_n_score<T: Real>(corr: &RoutedCorrelation<T>, leg: Leg) -> Result<T> {
    let n = corr.n_copies;
    let table = match leg {
        Leg::B0 => &corr.short,
        Leg::B1 => &corr.long,
    };
    check_settings(table, n)?;
    let clicks = settings_of(n);
    let mut total = T::zero();
    for x in 0..table.n_x {
        for y in 0..table.n_y {
            for a in 0..table.n_a {
                let b = a ^ (x & y);
                if b < clicks {
                    total = total + table.get(x, y, a, b);
                }
            }
        }
    }
    Ok(total / T::of_usize(clicks * clicks))
}

/// `N`-product BB84 score `2^{−N} Σ δ_{x=y} δ_{a=b} p(a,b|x,y,1)`.
pub fn bb84_n_score<T: Real>(corr: &RoutedCorrelation<T>) -> Result<T> {
    let n = corr.n_copies;
    check_settings(&corr.long, n)?;
    let mut total = T::zero();
    for x in 0..corr.long.n_x {
        for a in 0..corr.long.n_a {
            total = total + corr.long.get(x, x, a, a);
        }
    }
    Ok(total / T::of_usize(settings_of(n)))
}

/// Value of a `q`-penalized functional with its reference values.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PenalizedScore<T> {
    pub family: Family,
    pub n_copies: usize,
    pub q: T,
    pub value: T,
    /// Average click rate of `B₁`, the `η` of the ideal-score formula.
    pub click_rate: T,
    pub ideal_value: T,
    pub jm_threshold: T,
    /// `false` when `q` lies outside the range where the threshold is
    /// proven; the threshold is then reported but unproven.
    pub in_proven_window: bool,
}

impl<T: Real> PenalizedScore<T> {
    /// Certified non-joint-measurability: a proven threshold exceeded by
    /// more than [`CROSSING_TOLERANCE`].
    pub fn certified(&self) -> bool {
        self.in_proven_window && self.exceeds_threshold()
    }

    pub fn exceeds_threshold(&self) -> bool {
        self.value > self.jm_threshold + T::of(CROSSING_TOLERANCE)
    }
}

/// Base score minus `(q/2^N) Σ_{y, b≠∅} p_B(b|y,1)`.
pub fn penalized_score<T: Real>(corr: &RoutedCorrelation<T>, family: Family, q: T) -> Result<PenalizedScore<T>> {
    if !(q >= T::zero()) {
        return Err(Error::InvalidParameter(format!("penalty q = {q} must be nonnegative")));
    }
    let n = corr.n_copies;
    let base = match family {
        Family::Bb84 => bb84_n_score(corr)?,
        Family::Chsh => chsh_n_score(corr, Leg::B1)?,
    };
    let settings = settings_of(n);
    let clicks: T = (0..settings).map(|y| corr.click_probability(y)).sum();
    let click_rate = clicks / T::of_usize(settings);
    let coefficient = family.click_coefficient::<T>(n);
    Ok(PenalizedScore {
        family,
        n_copies: n,
        q,
        value: base - q * click_rate,
        click_rate,
        ideal_value: (coefficient - q) * click_rate,
        jm_threshold: family.jm_threshold(n, q),
        in_proven_window: family.in_proven_window(n, q),
    })
}

/// Efficiency at which the ideal score `(c − q)η` meets the JM threshold
/// `(c − q)/2^N`.
pub fn critical_efficiency_closed_form<T: Real>(family: Family, n_copies: usize, q: T) -> Result<T> {
    let coefficient = family.click_coefficient::<T>(n_copies);
    let margin = coefficient - q;
    if !(margin > T::zero()) {
        return Err(Error::ZeroIdealMargin { q: q.as_f64(), coefficient: coefficient.as_f64() });
    }
    Ok(family.jm_threshold(n_copies, q) / margin)
}
