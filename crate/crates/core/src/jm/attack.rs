use super::ClickPattern;
use crate::error::{Error, Result};
use crate::inequalities::Family;
use crate::operator::Operator;
use crate::scalar::Real;
use crate::strategies::{ideal_chsh_measurements, trace_product, CorrelationTable, RoutedCorrelation, RoutedStrategy};

/// A parent POVM of the distant device: one effect per reported click
/// pattern.
#[derive(Clone, Debug)]
pub struct ParentPovm<T> {
    pub n_copies: usize,
    pub effects: Vec<(ClickPattern, Operator<T>)>,
}

impl<T: Real> ParentPovm<T> {
    /// `max |Σ E − 𝕀|` entrywise.
    pub fn completeness_defect(&self) -> T {
        let Some((_, first)) = self.effects.first() else {
            return T::infinity();
        };
        let sum = self.effects.iter().skip(1).fold(first.clone(), |acc, (_, e)| &acc + e);
        sum.max_abs_diff(&Operator::identity(first.dim()))
    }
}

/// Setting reported by the single-setting attack.
pub const ATTACK_SETTING: usize = 0;

/// Single-setting attack: measure the honest distant measurement of
/// setting 0 (Alice's `Z^⊗N` basis for BB84, Bob's first CHSH basis for
/// CHSH) and report its outcome there, `∅` at every other setting.
pub fn build_jm_attack<T: Real>(family: Family, n_copies: usize) -> Result<ParentPovm<T>> {
    let (alice, bob) = ideal_chsh_measurements::<T>(n_copies)?;
    let honest = match family {
        Family::Bb84 => alice,
        Family::Chsh => bob,
    };
    let effects = honest
        .setting(ATTACK_SETTING)
        .iter()
        .enumerate()
        .map(|(b, e)| Ok((ClickPattern::single(n_copies, ATTACK_SETTING, b)?, e.clone())))
        .collect::<Result<_>>()?;
    Ok(ParentPovm { n_copies, effects })
}

/// Correlations of the JM model `p(a,b|x,y,1) = Σ_b⃗ δ_{b_y,b} tr(ρ A ⊗ E_b⃗)`.
/// The short-path table is the honest one.
pub fn simulate_jm_model<T: Real>(strategy: &RoutedStrategy<T>, parent: &ParentPovm<T>) -> Result<RoutedCorrelation<T>> {
    let settings = strategy.b1.n_settings();
    let clicks = strategy.b1.n_outcomes();
    let dim = strategy.b1.dim();
    for (pattern, effect) in &parent.effects {
        if pattern.n_settings() != settings {
            return Err(Error::SettingMismatch { expected: settings, found: pattern.n_settings() });
        }
        if let Some((y, b)) = pattern.clicks().find(|&(_, b)| b >= clicks) {
            return Err(Error::InvalidParameter(format!("pattern outcome {b} at setting {y} outside 0..{clicks}")));
        }
        if effect.dim() != dim {
            return Err(Error::DimensionMismatch(format!("parent effect dim {} vs {dim}", effect.dim())));
        }
        let low = effect.min_eigenvalue()?;
        if low < -T::psd_tolerance() {
            return Err(Error::NotPsd(low.as_f64()));
        }
    }
    let defect = parent.completeness_defect();
    if !(defect <= T::psd_tolerance()) {
        return Err(Error::IncompletePovm(defect.as_f64()));
    }

    let honest = strategy.correlation();
    let steered = strategy.alice_steered();
    let n_a = steered.first().map_or(0, Vec::len);
    let mut long = CorrelationTable::zeros(steered.len(), settings, n_a, clicks + 1);
    for (x, per_outcome) in steered.iter().enumerate() {
        for (a, m) in per_outcome.iter().enumerate() {
            for (pattern, effect) in &parent.effects {
                let p = trace_product(m, effect);
                for (y, entry) in pattern.entries.iter().enumerate() {
                    long.add(x, y, a, entry.unwrap_or(clicks), p);
                }
            }
        }
    }
    Ok(RoutedCorrelation { n_copies: honest.n_copies, short: honest.short, long })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::strategies::{build_strategy, StrategyKind};

    #[test]
    fn bb84_attack_is_z_basis() {
        let parent = build_jm_attack::<f64>(Family::Bb84, 1).unwrap();
        assert_eq!(parent.effects.len(), 2);
        assert_eq!(parent.effects[0].0.entries, vec![Some(0), None]);
        assert_eq!(parent.effects[0].1, Operator::diagonal(&[1.0, 0.0]));
        assert_eq!(parent.effects[1].1, Operator::diagonal(&[0.0, 1.0]));
        assert!(parent.completeness_defect() < 1e-15);
    }

    #[test]
    fn always_null_parent_never_clicks() {
        let s = build_strategy::<f64>(StrategyKind::RBb84, 2, 1.0, 1.0).unwrap();
        let parent = ParentPovm { n_copies: 2, effects: vec![(ClickPattern::all_null(2), Operator::identity(4))] };
        let corr = simulate_jm_model(&s, &parent).unwrap();
        for y in 0..4 {
            assert!(corr.click_probability(y).abs() < 1e-15);
        }
        corr.validate(1e-12).unwrap();
    }

    #[test]
    fn incomplete_parent_rejected() {
        let s = build_strategy::<f64>(StrategyKind::RBb84, 1, 1.0, 1.0).unwrap();
        let mut parent = build_jm_attack::<f64>(Family::Bb84, 1).unwrap();
        parent.effects.pop();
        assert!(matches!(simulate_jm_model(&s, &parent), Err(Error::IncompletePovm(_))));
    }
}
