use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An assignment of an outcome or `∅` (`None`) to every setting of the
/// distant device: the outcome alphabet of a parent measurement.
///
/// Patterns are indexed by a mixed-radix counter with one base-`2^N + 1`
/// digit per setting, setting 0 fastest. Digit 0 is `∅`, digit `d > 0`
/// is outcome `d − 1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ClickPattern {
    pub n_copies: usize,
    pub entries: Vec<Option<usize>>,
}

impl ClickPattern {
    pub fn new(n_copies: usize, entries: Vec<Option<usize>>) -> Result<Self> {
        let settings = 1usize << n_copies;
        if entries.len() != settings {
            return Err(Error::SettingMismatch { expected: settings, found: entries.len() });
        }
        if let Some(bad) = entries.iter().flatten().find(|&&b| b >= settings) {
            return Err(Error::InvalidParameter(format!("outcome {bad} outside 0..{settings}")));
        }
        Ok(Self { n_copies, entries })
    }

    pub fn all_null(n_copies: usize) -> Self {
        Self { n_copies, entries: vec![None; 1 << n_copies] }
    }

    /// Clicks only at `setting`, with `outcome`.
    pub fn single(n_copies: usize, setting: usize, outcome: usize) -> Result<Self> {
        let mut entries = vec![None; 1 << n_copies];
        if setting >= entries.len() {
            return Err(Error::InvalidParameter(format!("setting {setting} outside 0..{}", entries.len())));
        }
        entries[setting] = Some(outcome);
        Self::new(n_copies, entries)
    }

    pub fn radix(n_copies: usize) -> u64 {
        (1u64 << n_copies) + 1
    }

    /// `(2^N + 1)^{2^N}`; saturates for `N ≥ 4`.
    pub fn count(n_copies: usize) -> u64 {
        Self::radix(n_copies).saturating_pow(1 << n_copies)
    }

    pub fn from_index(n_copies: usize, mut index: u64) -> Self {
        let radix = Self::radix(n_copies);
        let entries = (0..1usize << n_copies)
            .map(|_| {
                let digit = index % radix;
                index /= radix;
                digit.checked_sub(1).map(|b| b as usize)
            })
            .collect();
        Self { n_copies, entries }
    }

    pub fn index(&self) -> u64 {
        let radix = Self::radix(self.n_copies);
        self.entries
            .iter()
            .rev()
            .fold(0u64, |acc, e| acc * radix + e.map_or(0, |b| b as u64 + 1))
    }

    pub fn n_settings(&self) -> usize {
        self.entries.len()
    }

    pub fn click_count(&self) -> usize {
        self.entries.iter().filter(|e| e.is_some()).count()
    }

    /// `(setting, outcome)` pairs of the clicked settings.
    pub fn clicks(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.entries.iter().enumerate().filter_map(|(y, e)| e.map(|b| (y, b)))
    }

    /// Representative of the orbit under a global XOR of every reported
    /// outcome: the last clicked setting reports outcome 0. This is also
    /// the smallest index in the orbit.
    pub fn canonical(&self) -> Self {
        let mask = self.entries.iter().rev().find_map(|e| *e).unwrap_or(0);
        Self {
            n_copies: self.n_copies,
            entries: self.entries.iter().map(|e| e.map(|b| b ^ mask)).collect(),
        }
    }
}

impl fmt::Display for ClickPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, e) in self.entries.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            match e {
                Some(b) => write!(f, "{b}")?,
                None => f.write_str("∅")?,
            }
        }
        f.write_str(")")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_round_trip() {
        for n in 1..=2 {
            for i in 0..ClickPattern::count(n) {
                let p = ClickPattern::from_index(n, i);
                assert_eq!(p.index(), i);
                assert!(p.click_count() <= 1 << n);
            }
        }
        assert_eq!(ClickPattern::count(3), 43_046_721);
    }

    #[test]
    fn setting_zero_is_fastest_digit() {
        let p = ClickPattern::from_index(1, 1);
        assert_eq!(p.entries, vec![Some(0), None]);
        let p = ClickPattern::from_index(1, 3);
        assert_eq!(p.entries, vec![None, Some(0)]);
    }

    #[test]
    fn canonical_is_orbit_minimum() {
        let n = 2;
        for i in 0..ClickPattern::count(n) {
            let p = ClickPattern::from_index(n, i);
            let orbit_min = (0..4)
                .map(|m| ClickPattern { n_copies: n, entries: p.entries.iter().map(|e| e.map(|b| b ^ m)).collect() }.index())
                .min()
                .unwrap();
            assert_eq!(p.canonical().index(), orbit_min);
        }
    }

    #[test]
    fn validation() {
        assert!(ClickPattern::new(1, vec![None]).is_err());
        assert!(ClickPattern::new(1, vec![Some(2), None]).is_err());
        assert_eq!(ClickPattern::single(1, 1, 1).unwrap().to_string(), "(∅,1)");
    }
}
