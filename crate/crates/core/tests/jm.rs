mod common;

use rand::Rng;
use routed_bell::jm::{click_atom, scan_profile, ClickPattern, ParentPovm, ScanOptions};
use routed_bell::operator::Operator;
use routed_bell::{
    alpha, beta, build_jm_attack, build_strategy, c_operator, exhaustive_scan, gram_bound_scan, penalized_score,
    simulate_jm_model, Error, Family, StrategyKind,
};

use common::*;

const R: f64 = std::f64::consts::FRAC_1_SQRT_2;

fn beta_prime() -> f64 {
    (4.0 - 2f64.sqrt()) / 4.0
}

fn kind_of(family: Family) -> StrategyKind {
    match family {
        Family::Bb84 => StrategyKind::RBb84,
        Family::Chsh => StrategyKind::RChsh,
    }
}

#[test]
fn atoms_match_direct_sums() {
    for family in [Family::Bb84, Family::Chsh] {
        for n in 1..=2 {
            for y in 0..1 << n {
                for b in 0..1 << n {
                    let p = ClickPattern::single(n, y, b).unwrap();
                    let direct = direct_c_operator(family, &p, 0.0);
                    let atom = click_atom::<f64>(family, n, y, b);
                    assert!(atom.max_abs_diff(&direct) < 1e-14, "{family} N={n} y={y} b={b}");
                }
            }
        }
    }
}

#[test]
fn c_operator_matches_oracle_on_every_pattern() {
    for family in [Family::Bb84, Family::Chsh] {
        for i in 0..ClickPattern::count(2) {
            let p = ClickPattern::from_index(2, i);
            let got = c_operator::<f64>(family, &p, 0.7);
            assert!(got.max_abs_diff(&direct_c_operator(family, &p, 0.7)) < 1e-13);
        }
    }
    let empty = c_operator::<f64>(Family::Bb84, &ClickPattern::all_null(1), 0.5);
    assert_eq!(empty.max_eigenvalue().unwrap(), 0.0);
}

#[test]
fn bb84_scan_matches_brute_force() {
    for n in 1..=2 {
        for q in [0.6, R, 0.75, 0.9, 1.0] {
            let report = exhaustive_scan::<f64>(Family::Bb84, n, q, 1, false).unwrap();
            let (oracle, _) = brute_force_max_lambda(Family::Bb84, n, q);
            assert!((report.max_lambda - oracle).abs() < 1e-10, "N={n} q={q}");
            assert_eq!(report.verified, q >= R - 1e-12, "N={n} q={q}");
            assert_eq!(report.patterns_scanned, ClickPattern::count(n));
        }
        let at_window = exhaustive_scan::<f64>(Family::Bb84, n, R, 1, false).unwrap();
        assert!((at_window.max_lambda - (1.0 - R)).abs() < 1e-9);
    }
}

#[test]
fn bb84_below_window_has_two_click_witness() {
    let report = exhaustive_scan::<f64>(Family::Bb84, 1, R - 0.01, 1, false).unwrap();
    assert!(!report.verified);
    assert_eq!(report.argmax_pattern.click_count(), 2);
    assert!((report.max_lambda - (1.0 + R - 2.0 * (R - 0.01))).abs() < 1e-12);
}

#[test]
fn chsh_scan_matches_brute_force() {
    for n in 1..=2 {
        for q in [0.6, 0.62, 0.66, 0.7, 0.72] {
            let report = exhaustive_scan::<f64>(Family::Chsh, n, q, 1, false).unwrap();
            let (oracle, _) = brute_force_max_lambda(Family::Chsh, n, q);
            assert!((report.max_lambda - oracle).abs() < 1e-10, "N={n} q={q}");
        }
    }
    let report = exhaustive_scan::<f64>(Family::Chsh, 1, 0.64, 1, false).unwrap();
    assert!((report.max_lambda - (1.5 - 2.0 * 0.64)).abs() < 1e-12);
    assert!(!report.verified, "0.64 lies below β′");
}

#[test]
fn chsh_threshold_flips_at_beta_prime() {
    let a: f64 = alpha();
    for n in 1..=2 {
        let pivot = a.powi(n as i32 - 1) * beta_prime();
        let profile = scan_profile::<f64>(Family::Chsh, n, ScanOptions::default()).unwrap();
        assert!(profile.report(pivot + 1e-4).verified, "N={n}");
        assert!(!profile.report(pivot - 1e-4).verified, "N={n}");
        let ratio = profile.beta_prime_threshold() / a.powi(n as i32 - 1);
        assert!((ratio - beta_prime()).abs() < 1e-6, "N={n} ratio {ratio}");
        let lower: f64 = a.powi(n as i32 - 1) * beta::<f64>();
        assert!(profile.report(lower).verified);
    }
}

#[test]
fn scans_are_deterministic_across_workers_and_pruning() {
    let max = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    for family in [Family::Bb84, Family::Chsh] {
        let q = family.proven_window::<f64>(2).0;
        let reference = exhaustive_scan::<f64>(family, 2, q, 1, false).unwrap();
        for workers in [1, 4, max] {
            for prune in [false, true] {
                let r = exhaustive_scan::<f64>(family, 2, q, workers, prune).unwrap();
                assert_eq!(r.max_lambda.to_bits(), reference.max_lambda.to_bits());
                assert_eq!(r.argmax_pattern, reference.argmax_pattern);
                assert_eq!(r.verified, reference.verified);
                for (x, y) in r.click_profile.iter().zip(&reference.click_profile) {
                    assert_eq!(x.max_norm.to_bits(), y.max_norm.to_bits());
                }
                if !prune {
                    assert_eq!(r.click_profile, reference.click_profile);
                }
            }
        }
    }
}

#[test]
fn scan_guards() {
    assert!(matches!(exhaustive_scan::<f64>(Family::Bb84, 4, R, 1, false), Err(Error::PatternSpaceTooLarge(4))));
    assert!(matches!(exhaustive_scan::<f64>(Family::Bb84, 0, R, 1, false), Err(Error::InvalidParameter(_))));
    assert!(matches!(exhaustive_scan::<f64>(Family::Bb84, 1, R, 0, false), Err(Error::InvalidParameter(_))));
}

#[test]
fn progress_reports_reach_total() {
    let seen = std::sync::Mutex::new(Vec::new());
    let callback = |p: routed_bell::jm::ScanProgress| seen.lock().unwrap().push((p.scanned, p.total));
    let options = ScanOptions { workers: 1, prune: false, progress: Some(&callback) };
    scan_profile::<f64>(Family::Bb84, 2, options).unwrap();
    let seen = seen.into_inner().unwrap();
    assert_eq!(seen.last(), Some(&(625, 625)));
}

#[test]
fn gram_bounds_dominate_sum_norms() {
    for family in [Family::Bb84, Family::Chsh] {
        for n in 1..=2 {
            let entries = gram_bound_scan::<f64>(family, n, R, ScanOptions::default()).unwrap();
            for e in entries.values() {
                assert_eq!(e.sum_exceeds_gram, 0, "{family} N={n} k={}", e.clicks);
                assert!(e.max_norm <= e.gram_bound + 1e-9);
            }
            let single = &entries[&1];
            assert!((single.gram_bound - single.max_norm).abs() < 1e-12);
        }
    }
}

#[test]
fn bb84_gram_matrix_meets_analytic_bound() {
    for n in 1..=2 {
        let entries = gram_bound_scan::<f64>(Family::Bb84, n, R, ScanOptions::default()).unwrap();
        for e in entries.values() {
            assert_eq!(e.gram_exceeds_gk, 0, "N={n} k={}", e.clicks);
            assert!((e.analytic_gk_shifted - (1.0 - R)).abs() < 1e-9);
        }
    }
}

/// Single-copy atoms with different settings have Bloch axes at a right
/// angle, so `‖√π′ √π″‖ = (1 + √3)/4 ≈ 0.68301`, above `β ≈ 0.66581`. The
/// β-based `G_k` therefore fails to dominate the worst two-click `Γ`.
#[test]
fn chsh_gram_matrix_exceeds_beta_bound() {
    let a: f64 = alpha();
    let off = (1.0 + 3f64.sqrt()) / 4.0;
    assert!(off > beta::<f64>());
    let p0 = click_atom::<f64>(Family::Chsh, 1, 0, 0).sqrt_psd().unwrap();
    let p1 = click_atom::<f64>(Family::Chsh, 1, 1, 0).sqrt_psd().unwrap();
    assert!(((&p0 * &p1).operator_norm().unwrap() - off).abs() < 1e-12);
    for n in 1..=2 {
        let entries = gram_bound_scan::<f64>(Family::Chsh, n, R, ScanOptions::default()).unwrap();
        assert_eq!(entries[&1].gram_exceeds_gk, 0);
        let expected = a.powi(n as i32) + a.powi(n as i32 - 1) * off;
        assert!((entries[&2].gram_bound - expected).abs() < 1e-10, "N={n}");
        assert!(entries[&2].gram_exceeds_gk > 0, "N={n}");
    }
}

#[test]
fn attack_saturates_threshold() {
    let a: f64 = alpha();
    for family in [Family::Bb84, Family::Chsh] {
        for n in 1..=2 {
            let strategy = build_strategy::<f64>(kind_of(family), n, 1.0, 1.0).unwrap();
            let parent = build_jm_attack::<f64>(family, n).unwrap();
            assert!(parent.completeness_defect() < 1e-12);
            let corr = simulate_jm_model(&strategy, &parent).unwrap();
            corr.validate(1e-12).unwrap();
            let qs = match family {
                Family::Bb84 => vec![R, 0.9],
                Family::Chsh => vec![a.powi(n as i32 - 1) * beta::<f64>(), a.powi(n as i32 - 1) * beta_prime()],
            };
            for q in qs {
                let s = penalized_score(&corr, family, q).unwrap();
                assert!((s.value - s.jm_threshold).abs() < 1e-12, "{family} N={n} q={q}");
            }
        }
    }
}

#[test]
fn attack_validation() {
    let strategy = build_strategy::<f64>(StrategyKind::RBb84, 1, 1.0, 1.0).unwrap();
    let mut parent = build_jm_attack::<f64>(Family::Bb84, 1).unwrap();
    parent.effects.pop();
    assert!(matches!(simulate_jm_model(&strategy, &parent), Err(Error::IncompletePovm(_))));
    let wrong = build_jm_attack::<f64>(Family::Bb84, 2).unwrap();
    assert!(matches!(simulate_jm_model(&strategy, &wrong), Err(Error::SettingMismatch { .. })));
}

/// `G^{−1/2}` for a positive definite `G`.
fn inverse_sqrt(g: &Operator<f64>) -> Operator<f64> {
    let (values, vectors) = g.eigh().unwrap();
    let inv: Vec<f64> = values.iter().map(|v| 1.0 / v.sqrt()).collect();
    &(&vectors * &Operator::diagonal(&inv)) * &vectors.adjoint()
}

fn random_parent(r: &mut rand_chacha::ChaCha8Rng, n: usize) -> ParentPovm<f64> {
    let d = 1 << n;
    let count = ClickPattern::count(n);
    let raw: Vec<Operator<f64>> = (0..count)
        .map(|_| if r.gen_bool(0.5) { random_psd(r, d) } else { Operator::zeros(d) })
        .collect();
    let mut total = raw.iter().fold(Operator::identity(d).scale(1e-3), |acc, m| &acc + m);
    total = (&total + &total.adjoint()).scale(0.5);
    let w = inverse_sqrt(&total);
    let mut effects: Vec<(ClickPattern, Operator<f64>)> = raw
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let e = &(&w * m) * &w;
            (ClickPattern::from_index(n, i as u64), (&e + &e.adjoint()).scale(0.5))
        })
        .collect();
    let slack = &(&w * &Operator::identity(d).scale(1e-3)) * &w;
    let null = &effects[0].1 + &slack;
    effects[0].1 = (&null + &null.adjoint()).scale(0.5);
    ParentPovm { n_copies: n, effects }
}

#[test]
fn random_jm_models_stay_below_threshold() {
    let mut r = rng(21);
    for family in [Family::Bb84, Family::Chsh] {
        for n in 1..=2 {
            let strategy = build_strategy::<f64>(kind_of(family), n, 1.0, 1.0).unwrap();
            let q = family.proven_window::<f64>(n).0;
            let trials = if n == 1 { 50 } else { 10 };
            for _ in 0..trials {
                let parent = random_parent(&mut r, n);
                let corr = simulate_jm_model(&strategy, &parent).unwrap();
                let s = penalized_score(&corr, family, q).unwrap();
                assert!(s.value <= s.jm_threshold + 1e-9, "{family} N={n}: {} > {}", s.value, s.jm_threshold);
            }
        }
    }
}

#[test]
fn pattern_index_round_trips() {
    for n in 1..=2 {
        for i in 0..ClickPattern::count(n) {
            let p = ClickPattern::from_index(n, i);
            assert_eq!(p.index(), i);
            let c = p.canonical();
            assert!(c.index() <= i);
            assert_eq!(c.click_count(), p.click_count());
        }
    }
    assert_eq!(ClickPattern::count(3), 43_046_721);
    assert_eq!(ClickPattern::single(1, 1, 0).unwrap().to_string(), "(∅,0)");
}
