//! Joint-measurability certification: click patterns, C-operators, the
//! exhaustive pattern scan with its Gram bounds, and saturating attacks.
//!
//! A parent measurement of the distant device is a POVM over click
//! patterns. Its penalized score is `2^{−N}` times the largest eigenvalue
//! of some `C_b⃗ = Σ_{clicked y} (S_{y,b_y} − q𝕀)`, so bounding
//! `λmax(C_b⃗)` over every pattern bounds every JM model.

mod attack;
mod pattern;
mod scan;

pub use attack::{build_jm_attack, simulate_jm_model, ParentPovm};
pub use pattern::ClickPattern;
pub use scan::{
    beta_prime_threshold, default_workers, exhaustive_scan, gram_bound_scan, scan_profile, CertificationReport,
    ClickBest, GramEntry, ScanOptions, ScanProfile, ScanProgress, MAX_SCAN_COPIES, SCAN_CHUNK, VERIFY_TOLERANCE,
};

use crate::error::Result;
use crate::inequalities::Family;
use crate::operator::{tensor, Operator};
use crate::scalar::{alpha, beta, Real};
use crate::strategies::qubit_effect;

/// Per-copy factor of a CHSH atom: `π'_{y,b} = ½(A^0_b + A^1_{b⊕y})`.
pub fn chsh_pi_prime<T: Real>(y: usize, b: usize) -> Operator<T> {
    (&qubit_effect::<T>(false, 0, b) + &qubit_effect(false, 1, b ^ y)).scale(T::of(0.5))
}

/// The positive operator `S_{y,b}` contributed by a click with outcome `b`
/// at setting `y`: `⊗_j A^{y_j}_{b_j}` for BB84 and `⊗_j π'_{y_j,b_j}` for
/// CHSH. Copy 0 is the first tensor factor.
pub fn click_atom<T: Real>(family: Family, n_copies: usize, setting: usize, outcome: usize) -> Operator<T> {
    let factors: Vec<Operator<T>> = (0..n_copies)
        .map(|j| {
            let (y, b) = ((setting >> j) & 1, (outcome >> j) & 1);
            match family {
                Family::Bb84 => qubit_effect(false, y, b),
                Family::Chsh => chsh_pi_prime(y, b),
            }
        })
        .collect();
    tensor(&factors).expect("at least one copy")
}

/// `C_b⃗ = Σ_{clicked y} (S_{y,b_y} − q𝕀)`; the zero operator for the
/// all-`∅` pattern.
pub fn c_operator<T: Real>(family: Family, pattern: &ClickPattern, q: T) -> Operator<T> {
    let dim = 1usize << pattern.n_copies;
    let shift = Operator::identity(dim).scale(q);
    pattern.clicks().fold(Operator::zeros(dim), |acc, (y, b)| {
        &(&acc + &click_atom(family, pattern.n_copies, y, b)) - &shift
    })
}

/// Analytic Gram norm `‖G_k‖`: `1 + (k − 1)/√2` for BB84 and
/// `α^N + (k − 1)α^{N−1}β` for CHSH.
pub fn analytic_gk_norm<T: Real>(family: Family, n_copies: usize, clicks: usize) -> T {
    let off = T::of_usize(clicks.saturating_sub(1));
    match family {
        Family::Bb84 => T::one() + off * T::FRAC_1_SQRT_2(),
        Family::Chsh => {
            let a = alpha::<T>();
            a.powi(n_copies as i32) + off * a.powi(n_copies as i32 - 1) * beta::<T>()
        }
    }
}

/// All atoms of a family as dense real matrices, indexed by
/// `setting · 2^N + outcome`.
pub(crate) struct AtomTable<T> {
    pub dim: usize,
    pub settings: usize,
    pub matrices: Vec<Vec<T>>,
}

impl<T: Real> AtomTable<T> {
    pub fn new(family: Family, n_copies: usize) -> Self {
        let settings = 1usize << n_copies;
        let matrices = (0..settings)
            .flat_map(|y| (0..settings).map(move |b| (y, b)))
            .map(|(y, b)| click_atom::<T>(family, n_copies, y, b).real_entries().expect("real atoms"))
            .collect();
        Self { dim: settings, settings, matrices }
    }

    pub fn atom(&self, setting: usize, outcome: usize) -> &[T] {
        &self.matrices[setting * self.settings + outcome]
    }

    /// `Γ_{ll'} = ‖√S_l √S_{l'}‖` for every pair of atoms.
    pub fn gram_table(&self) -> Result<Vec<T>> {
        let roots = self
            .matrices
            .iter()
            .map(|m| Operator::from_real(self.dim, m)?.sqrt_psd())
            .collect::<Result<Vec<_>>>()?;
        let n = roots.len();
        let mut out = vec![T::zero(); n * n];
        for l in 0..n {
            for m in l..n {
                let v = (&roots[l] * &roots[m]).operator_norm()?;
                out[l * n + m] = v;
                out[m * n + l] = v;
            }
        }
        Ok(out)
    }
}
