#![allow(dead_code)]

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use routed_bell::jm::ClickPattern;
use routed_bell::operator::Operator;
use routed_bell::Family;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_complex(rng: &mut ChaCha8Rng, n: usize) -> Vec<Complex<f64>> {
    (0..n).map(|_| Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()
}

pub fn random_matrix(rng: &mut ChaCha8Rng, n: usize) -> Operator<f64> {
    Operator::new(n, random_complex(rng, n * n)).unwrap()
}

/// `G G†` for a random complex `G` of random rank.
pub fn random_psd(rng: &mut ChaCha8Rng, n: usize) -> Operator<f64> {
    let rank = rng.gen_range(1..=n);
    let g = Operator::new(n, (0..n * n).map(|i| {
        if i % n < rank {
            Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        } else {
            Complex::new(0.0, 0.0)
        }
    }).collect()).unwrap();
    &g * &g.adjoint()
}

pub fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> Operator<f64> {
    let g = random_matrix(rng, n);
    (&g + &g.adjoint()).scale(0.5)
}

pub fn vector_norm(v: &[Complex<f64>]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Alice's single-qubit projectors written out by hand: `Z` basis for
/// setting 0, `X` basis for setting 1.
pub fn alice_qubit(setting: usize, outcome: usize) -> Operator<f64> {
    let s = if outcome == 0 { 0.5 } else { -0.5 };
    let m = match setting {
        0 => [0.5 + s, 0.0, 0.0, 0.5 - s],
        _ => [0.5, s, s, 0.5],
    };
    Operator::from_real(2, &m).unwrap()
}

/// `⊗_j A^{x_j}_{a_j}`, copy 0 first.
pub fn alice_product(n: usize, x: usize, a: usize) -> Operator<f64> {
    (1..n).fold(alice_qubit(x & 1, a & 1), |acc, j| acc.kron(&alice_qubit((x >> j) & 1, (a >> j) & 1)))
}

/// C-operator from its defining sums: BB84 uses `⊗ A^{y}_{b}`, CHSH uses
/// `2^{−N} Σ_x ⊗_j A^{x_j}_{b_j ⊕ x_j y_j}`.
pub fn direct_c_operator(family: Family, pattern: &ClickPattern, q: f64) -> Operator<f64> {
    let n = pattern.n_copies;
    let d = 1 << n;
    let mut total = Operator::zeros(d);
    for (y, b) in pattern.clicks() {
        let s = match family {
            Family::Bb84 => alice_product(n, y, b),
            Family::Chsh => (0..d)
                .map(|x| alice_product(n, x, b ^ (x & y)))
                .fold(Operator::zeros(d), |acc, m| &acc + &m)
                .scale(1.0 / d as f64),
        };
        total = &(&total + &s) - &Operator::identity(d).scale(q);
    }
    total
}

/// Brute-force `max_b⃗ λmax(C_b⃗)` through the dense Hermitian solver.
pub fn brute_force_max_lambda(family: Family, n: usize, q: f64) -> (f64, usize) {
    let mut best = f64::NEG_INFINITY;
    let mut best_clicks = 0;
    for i in 0..ClickPattern::count(n) {
        let p = ClickPattern::from_index(n, i);
        let l = direct_c_operator(family, &p, q).max_eigenvalue().unwrap();
        if l > best + 1e-12 {
            best = l;
            best_clicks = p.click_count();
        }
    }
    (best, best_clicks)
}
