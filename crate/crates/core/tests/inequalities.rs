use proptest::prelude::*;
use routed_bell::{build_strategy, critical_efficiency_closed_form, penalized_score, Error, Family, StrategyKind};

fn per_click(family: Family, n: usize) -> f64 {
    match family {
        Family::Bb84 => 1.0,
        Family::Chsh => (std::f64::consts::PI / 8.0).cos().powi(2 * n as i32),
    }
}

fn kind_of(family: Family) -> StrategyKind {
    match family {
        Family::Bb84 => StrategyKind::RBb84,
        Family::Chsh => StrategyKind::RChsh,
    }
}

#[test]
fn ideal_scores_on_grid() {
    for family in [Family::Bb84, Family::Chsh] {
        for n in 1..=3 {
            for eta in [0.1, 0.3, 0.5, 0.7, 0.9] {
                let c = build_strategy(kind_of(family), n, eta, 1.0).unwrap().correlation();
                for q in [std::f64::consts::FRAC_1_SQRT_2, 0.8, 0.9] {
                    let s = penalized_score(&c, family, q).unwrap();
                    let oracle = (per_click(family, n) - q) * eta;
                    assert!((s.value - oracle).abs() < 1e-12, "{family} N={n} η={eta} q={q}");
                    assert!((s.ideal_value - oracle).abs() < 1e-12);
                    assert!((s.click_rate - eta).abs() < 1e-12);
                }
            }
        }
    }
}

#[test]
fn threshold_and_windows() {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    assert!((Family::Bb84.jm_threshold(1, r) - (1.0 - r) / 2.0).abs() < 1e-15);
    assert!(Family::Bb84.in_proven_window(2, 1.0));
    assert!(!Family::Bb84.in_proven_window(2, r - 0.01));
    let top = per_click(Family::Chsh, 2);
    assert!(!Family::Chsh.in_proven_window(2, top));
    assert!(Family::Chsh.in_proven_window(2, top - 1e-6));
}

#[test]
fn critical_efficiency_is_two_to_minus_n() {
    for family in [Family::Bb84, Family::Chsh] {
        for n in 1..=4 {
            let q = per_click(family, n) * 0.95;
            let eta = critical_efficiency_closed_form(family, n, q).unwrap();
            assert_eq!(eta, 1.0 / (1u32 << n) as f64);
        }
    }
    assert!(matches!(
        critical_efficiency_closed_form(Family::Bb84, 1, 1.0),
        Err(Error::ZeroIdealMargin { .. })
    ));
}

#[test]
fn crossing_happens_exactly_at_critical_efficiency() {
    for family in [Family::Bb84, Family::Chsh] {
        for n in 1..=3 {
            let (q, _, _) = family.proven_window::<f64>(n);
            let critical = 1.0 / (1u32 << n) as f64;
            for i in 0..=10 {
                let eta = i as f64 / 10.0;
                let c = build_strategy(kind_of(family), n, eta, 1.0).unwrap().correlation();
                let s = penalized_score(&c, family, q).unwrap();
                assert_eq!(s.exceeds_threshold(), eta > critical, "{family} N={n} η={eta}");
            }
        }
    }
}

#[test]
fn negative_penalty_rejected() {
    let c = build_strategy(StrategyKind::RBb84, 1, 1.0, 1.0).unwrap().correlation();
    assert!(penalized_score(&c, Family::Bb84, -0.1).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn score_is_affine_and_monotone_in_eta(
        family in prop_oneof![Just(Family::Bb84), Just(Family::Chsh)],
        n in 1usize..=2,
        e1 in 0.0f64..=1.0,
        e2 in 0.0f64..=1.0,
    ) {
        let (q, _, _) = family.proven_window::<f64>(n);
        let score = |eta: f64| {
            let c = build_strategy(kind_of(family), n, eta, 1.0).unwrap().correlation();
            penalized_score(&c, family, q).unwrap().value
        };
        let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
        prop_assert!(score(lo) <= score(hi) + 1e-12);
        let mid = 0.5 * (lo + hi);
        prop_assert!((score(mid) - 0.5 * (score(lo) + score(hi))).abs() < 1e-12);
    }
}
