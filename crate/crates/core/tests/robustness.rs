use proptest::prelude::*;
use routed_bell::{delta_bound, robust_eta_star, robust_eta_star_from_delta, robust_gram_bound, Error, RobustnessInput};

const R: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Hand-expanded oracle for the robust critical efficiency.
fn oracle(n: usize, delta: f64, eps: f64, linear: bool) -> f64 {
    let alpha_n = (std::f64::consts::PI / 8.0).cos().powi(2 * n as i32);
    let shift = if linear { eps / alpha_n } else { 0.0 };
    (1.0 - R) / ((1 << n) as f64 * (1.0 - R - delta.sqrt() - shift))
}

#[test]
fn reference_values() {
    let plain = robust_eta_star_from_delta(1, 0.01, 0.0, false).unwrap();
    assert!((plain.eta_star - oracle(1, 0.01, 0.0, false)).abs() < 1e-14);
    assert!((plain.eta_star - 0.75921).abs() < 1e-5);
    assert!((plain.q - (R + 0.1)).abs() < 1e-15);
    let linear = robust_eta_star_from_delta(1, 0.01, 0.01, true).unwrap();
    assert!((linear.eta_star - oracle(1, 0.01, 0.01, true)).abs() < 1e-14);
    assert!((linear.eta_star - 0.80830).abs() < 1e-5);
}

#[test]
fn vanishing_noise_recovers_ideal() {
    for n in 1..=4 {
        let r = robust_eta_star_from_delta(n, 0.0, 0.0, false).unwrap();
        assert_eq!(r.eta_star, 1.0 / (1u32 << n) as f64);
    }
}

#[test]
fn delta_from_fidelity_gap() {
    let input = RobustnessInput { n_copies: 1, epsilon: 0.0, f_value: 0.001, linear_translation: false };
    let g: f64 = 0.001 * 0.001 + 0.002;
    let expected = 8.0 * g + 16.0 * g * g;
    assert!((delta_bound(&input).unwrap() - expected).abs() < 1e-15);
    let r = robust_eta_star(&input).unwrap();
    assert!((r.eta_star - oracle(1, expected, 0.0, false)).abs() < 1e-14);
}

#[test]
fn empty_window_is_an_error() {
    assert!(matches!(robust_eta_star_from_delta(1, 0.1, 0.0, false), Err(Error::RobustnessWindowEmpty(_))));
    let input = RobustnessInput { n_copies: 2, epsilon: 0.0, f_value: 0.05, linear_translation: false };
    assert!(matches!(robust_eta_star(&input), Err(Error::RobustnessWindowEmpty(_))));
}

#[test]
fn monotone_on_grid() {
    for n in 1..=3 {
        let deltas: Vec<f64> = (0..20).map(|i| i as f64 * 0.0045).collect();
        let etas: Vec<f64> = deltas.iter().map(|&d| robust_eta_star_from_delta(n, d, 0.0, false).unwrap().eta_star).collect();
        assert!(etas.windows(2).all(|w| w[0] < w[1]));
        let epsilons: Vec<f64> = (0..20).map(|i| i as f64 * 0.005).collect();
        let etas: Vec<f64> = epsilons.iter().map(|&e| robust_eta_star_from_delta(n, 0.001, e, true).unwrap().eta_star).collect();
        assert!(etas.windows(2).all(|w| w[0] < w[1]));
    }
}

#[test]
fn gram_bound_at_robust_q_is_constant() {
    for delta in [0.0, 1e-4, 0.01, 0.05] {
        let q = R + f64::sqrt(delta);
        for n in 1..=3 {
            for k in 1..=8 {
                let v = robust_gram_bound(n, k, delta, q).unwrap();
                assert!((v - (1.0 - R)).abs() < 1e-12, "δ={delta} k={k}");
            }
        }
    }
    assert!(robust_gram_bound(1, 0, 0.0, R).is_err());
}

proptest! {
    #[test]
    fn matches_oracle(n in 1usize..=4, delta in 0.0f64..0.08, eps in 0.0f64..0.05, linear in any::<bool>()) {
        match robust_eta_star_from_delta(n, delta, eps, linear) {
            Ok(r) => {
                prop_assert!((r.eta_star - oracle(n, delta, eps, linear)).abs() < 1e-12 * r.eta_star.max(1.0));
                prop_assert!(r.eta_star >= 1.0 / (1u32 << n) as f64);
            }
            Err(Error::RobustnessWindowEmpty(d)) => prop_assert!(d <= 0.0),
            Err(e) => prop_assert!(false, "unexpected {e}"),
        }
    }
}
