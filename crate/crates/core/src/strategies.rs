//! Reference routed strategies, the visibility and detection-loss models,
//! and the Born-rule correlation `p(a,b|x,y,i)`.
//!
//! Settings and outcomes of `N` parallel copies are bit strings packed
//! little-endian into integers: bit `j` belongs to copy `j`. Copy 0 is the
//! first (most significant) Kronecker factor.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{tensor, Operator, Pauli, PureState};
use crate::scalar::Real;

/// Largest number of parallel copies the dense representation supports.
pub const MAX_COPIES: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StrategyKind {
    /// `B₁` copies Alice's Pauli measurements.
    #[serde(rename = "rbb84")]
    RBb84,
    /// `B₁` copies `B₀`.
    #[serde(rename = "rchsh")]
    RChsh,
    /// Single-copy qubit strategy with four `B₁` settings: Alice's two
    /// bases followed by `B₀`'s two bases.
    #[serde(rename = "rbb84chsh")]
    RBb84Chsh,
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StrategyKind::RBb84 => "rbb84",
            StrategyKind::RChsh => "rchsh",
            StrategyKind::RBb84Chsh => "rbb84chsh",
        })
    }
}

impl FromStr for StrategyKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_', '(', ')', '+'], "").as_str() {
            "rbb84" => Ok(StrategyKind::RBb84),
            "rchsh" => Ok(StrategyKind::RChsh),
            "rbb84chsh" => Ok(StrategyKind::RBb84Chsh),
            other => Err(Error::InvalidParameter(format!("unknown strategy kind `{other}`"))),
        }
    }
}

/// Effects indexed by `(setting, outcome)`.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementAssembly<T> {
    effects: Vec<Vec<Operator<T>>>,
}

impl<T: Real> MeasurementAssembly<T> {
    pub fn new(effects: Vec<Vec<Operator<T>>>) -> Result<Self> {
        let dim = effects
            .first()
            .and_then(|s| s.first())
            .map(Operator::dim)
            .ok_or_else(|| Error::InvalidParameter("assembly needs at least one effect".into()))?;
        let outcomes = effects[0].len();
        if effects.iter().any(|s| s.len() != outcomes || s.iter().any(|e| e.dim() != dim)) {
            return Err(Error::DimensionMismatch("ragged measurement assembly".into()));
        }
        Ok(Self { effects })
    }

    pub fn n_settings(&self) -> usize {
        self.effects.len()
    }

    pub fn n_outcomes(&self) -> usize {
        self.effects[0].len()
    }

    pub fn dim(&self) -> usize {
        self.effects[0][0].dim()
    }

    pub fn effect(&self, setting: usize, outcome: usize) -> &Operator<T> {
        &self.effects[setting][outcome]
    }

    pub fn setting(&self, setting: usize) -> &[Operator<T>] {
        &self.effects[setting]
    }

    /// Largest deviation of `Σ_outcome effect` from the identity.
    pub fn completeness_defect(&self) -> T {
        let id = Operator::identity(self.dim());
        self.effects
            .iter()
            .map(|s| {
                let sum = s.iter().skip(1).fold(s[0].clone(), |acc, e| &acc + e);
                sum.max_abs_diff(&id)
            })
            .fold(T::zero(), T::max)
    }

    pub fn all_psd(&self, tol: T) -> bool {
        self.effects.iter().flatten().all(|e| e.is_psd(tol))
    }

    pub fn all_projective(&self, tol: T) -> bool {
        self.effects.iter().flatten().all(|e| (e * e).max_abs_diff(e) <= tol)
    }

    /// Scales every click effect by `eta` and appends the no-click effect
    /// `(1 − η)𝕀` as the last outcome of each setting.
    pub fn with_loss(&self, eta: T) -> Self {
        let null = Operator::identity(self.dim()).scale(T::one() - eta);
        let effects = self
            .effects
            .iter()
            .map(|s| s.iter().map(|e| e.scale(eta)).chain(std::iter::once(null.clone())).collect())
            .collect();
        Self { effects }
    }
}

fn qubit_alice<T: Real>(setting: usize, outcome: usize) -> Operator<T> {
    let observable = Operator::pauli(if setting == 0 { Pauli::Z } else { Pauli::X });
    let sign = if outcome == 0 { T::one() } else { -T::one() };
    (&Operator::identity(2) + &observable.scale(sign)).scale(T::of(0.5))
}

fn qubit_bob<T: Real>(setting: usize, outcome: usize) -> Operator<T> {
    let x = Operator::pauli(Pauli::X);
    let z = Operator::pauli(Pauli::Z);
    // Z − X rather than X − Z: with |φ⁺⟩ and the win condition
    // x·y = a ⊕ b only this sign reaches α
    let observable = if setting == 0 { &x + &z } else { &z - &x };
    let sign = if outcome == 0 { T::FRAC_1_SQRT_2() } else { -T::FRAC_1_SQRT_2() };
    (&Operator::identity(2) + &observable.scale(sign)).scale(T::of(0.5))
}

/// Single-qubit reference effect: Alice's `Z`/`X` projectors or Bob's
/// `(X + Z)/√2`, `(Z − X)/√2` projectors.
pub fn qubit_effect<T: Real>(bob: bool, setting: usize, outcome: usize) -> Operator<T> {
    if bob {
        qubit_bob(setting, outcome)
    } else {
        qubit_alice(setting, outcome)
    }
}

fn product_assembly<T: Real>(n_copies: usize, bob: bool) -> MeasurementAssembly<T> {
    let count = 1usize << n_copies;
    let effects = (0..count)
        .map(|setting| {
            (0..count)
                .map(|outcome| {
                    let factors: Vec<Operator<T>> = (0..n_copies)
                        .map(|j| qubit_effect(bob, (setting >> j) & 1, (outcome >> j) & 1))
                        .collect();
                    tensor(&factors).expect("n_copies ≥ 1")
                })
                .collect()
        })
        .collect();
    MeasurementAssembly { effects }
}

fn check_copies(n_copies: usize) -> Result<()> {
    if n_copies == 0 || n_copies > MAX_COPIES {
        return Err(Error::DimensionCap(format!("N = {n_copies} outside [1, {MAX_COPIES}]")));
    }
    Ok(())
}

/// Alice's and Bob's optimal `N`-product CHSH measurements.
pub fn ideal_chsh_measurements<T: Real>(
    n_copies: usize,
) -> Result<(MeasurementAssembly<T>, MeasurementAssembly<T>)> {
    check_copies(n_copies)?;
    Ok((product_assembly(n_copies, false), product_assembly(n_copies, true)))
}

/// `|φ⁺⟩^⊗N` with Alice's `N` qubits ordered before Bob's.
pub fn max_entangled_state<T: Real>(n_copies: usize) -> PureState<T> {
    let d = 1usize << n_copies;
    let amp = T::one() / T::of_usize(d).sqrt();
    let mut amplitudes = vec![Complex::new(T::zero(), T::zero()); d * d];
    for i in 0..d {
        amplitudes[i * d + i] = Complex::new(amp, T::zero());
    }
    PureState::new(amplitudes).expect("normalized by construction")
}

/// A full routed strategy `(ρ_AB, {A}, {B⁰}, {B¹}, η, v)`.
#[derive(Clone, Debug)]
pub struct RoutedStrategy<T> {
    pub kind: StrategyKind,
    pub n_copies: usize,
    pub state: Operator<T>,
    pub alice: MeasurementAssembly<T>,
    pub b0: MeasurementAssembly<T>,
    /// Click effects of the distant device, before the loss model.
    pub b1: MeasurementAssembly<T>,
    pub eta: T,
    pub visibility: T,
}

fn check_unit(name: &str, value: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&value) || value.is_nan() {
        return Err(Error::InvalidParameter(format!("{name} = {value} outside [0, 1]")));
    }
    Ok(())
}

/// Builds one of the reference strategies with source visibility `v`
/// (`v|φ⁺⟩⟨φ⁺|^⊗N + (1 − v)𝕀/4^N`) and `B₁` click efficiency `η`.
pub fn build_strategy<T: Real>(kind: StrategyKind, n_copies: usize, eta: T, visibility: T) -> Result<RoutedStrategy<T>> {
    check_unit("eta", eta.as_f64())?;
    check_unit("visibility", visibility.as_f64())?;
    if kind == StrategyKind::RBb84Chsh && n_copies != 1 {
        return Err(Error::InvalidParameter(format!("rbb84chsh is a single-copy strategy (N = {n_copies})")));
    }
    let (alice, b0) = ideal_chsh_measurements::<T>(n_copies)?;
    let b1 = match kind {
        StrategyKind::RBb84 => alice.clone(),
        StrategyKind::RChsh => b0.clone(),
        StrategyKind::RBb84Chsh => MeasurementAssembly {
            effects: alice.effects.iter().chain(b0.effects.iter()).cloned().collect(),
        },
    };
    let dim = 1usize << (2 * n_copies);
    let pure = max_entangled_state::<T>(n_copies).projector();
    let noise = Operator::identity(dim).scale((T::one() - visibility) / T::of_usize(dim));
    let state = &pure.scale(visibility) + &noise;
    Ok(RoutedStrategy { kind, n_copies, state, alice, b0, b1, eta, visibility })
}

/// Dense probability table indexed by `(x, y, a, b)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationTable<T> {
    pub n_x: usize,
    pub n_y: usize,
    pub n_a: usize,
    pub n_b: usize,
    data: Vec<T>,
}

impl<T: Real> CorrelationTable<T> {
    pub fn zeros(n_x: usize, n_y: usize, n_a: usize, n_b: usize) -> Self {
        Self { n_x, n_y, n_a, n_b, data: vec![T::zero(); n_x * n_y * n_a * n_b] }
    }

    fn index(&self, x: usize, y: usize, a: usize, b: usize) -> usize {
        ((x * self.n_y + y) * self.n_a + a) * self.n_b + b
    }

    pub fn get(&self, x: usize, y: usize, a: usize, b: usize) -> T {
        self.data[self.index(x, y, a, b)]
    }

    pub fn set(&mut self, x: usize, y: usize, a: usize, b: usize, value: T) {
        let i = self.index(x, y, a, b);
        self.data[i] = value;
    }

    pub fn add(&mut self, x: usize, y: usize, a: usize, b: usize, value: T) {
        let i = self.index(x, y, a, b);
        self.data[i] = self.data[i] + value;
    }

    pub fn values(&self) -> &[T] {
        &self.data
    }

    pub fn alice_marginal(&self, x: usize, y: usize, a: usize) -> T {
        (0..self.n_b).map(|b| self.get(x, y, a, b)).sum()
    }

    pub fn bob_marginal(&self, x: usize, y: usize, b: usize) -> T {
        (0..self.n_a).map(|a| self.get(x, y, a, b)).sum()
    }

    /// Sub-table keeping the listed `y` settings, renumbered in order.
    pub fn select_settings(&self, settings: &[usize]) -> Result<Self> {
        if let Some(&y) = settings.iter().find(|&&y| y >= self.n_y) {
            return Err(Error::InvalidParameter(format!("setting {y} outside 0..{}", self.n_y)));
        }
        let mut out = Self::zeros(self.n_x, settings.len(), self.n_a, self.n_b);
        for x in 0..self.n_x {
            for (new_y, &y) in settings.iter().enumerate() {
                for a in 0..self.n_a {
                    for b in 0..self.n_b {
                        out.set(x, new_y, a, b, self.get(x, y, a, b));
                    }
                }
            }
        }
        Ok(out)
    }
}

/// `p(a,b|x,y,i)` for both routes. The long-path table carries the no-click
/// outcome `∅` as its last `b` index.
#[derive(Clone, Debug, PartialEq)]
pub struct RoutedCorrelation<T> {
    pub n_copies: usize,
    pub short: CorrelationTable<T>,
    pub long: CorrelationTable<T>,
}

impl<T: Real> RoutedCorrelation<T> {
    pub fn null_outcome(&self) -> usize {
        self.long.n_b - 1
    }

    /// Total click probability `Σ_{b≠∅} p_B(b|y,1)` for setting `y`.
    pub fn click_probability(&self, y: usize) -> T {
        (0..self.null_outcome()).map(|b| self.long.bob_marginal(0, y, b)).sum()
    }

    /// Checks positivity, normalization and no-signaling within `tol`.
    pub fn validate(&self, tol: T) -> Result<()> {
        for (name, table) in [("short", &self.short), ("long", &self.long)] {
            if table.values().iter().any(|&p| p < -tol || p > T::one() + tol) {
                return Err(Error::InvalidParameter(format!("{name} table has entries outside [0, 1]")));
            }
            for x in 0..table.n_x {
                for y in 0..table.n_y {
                    let total: T = (0..table.n_a).map(|a| table.alice_marginal(x, y, a)).sum();
                    if (total - T::one()).abs() > tol {
                        return Err(Error::InvalidParameter(format!("{name} slice ({x},{y}) sums to {total}")));
                    }
                }
            }
        }
        for x in 0..self.short.n_x {
            for a in 0..self.short.n_a {
                let reference = self.short.alice_marginal(x, 0, a);
                let routes = (0..self.short.n_y)
                    .map(|y| self.short.alice_marginal(x, y, a))
                    .chain((0..self.long.n_y).map(|y| self.long.alice_marginal(x, y, a)));
                for value in routes {
                    if (value - reference).abs() > tol {
                        return Err(Error::InvalidParameter(format!("signaling in Alice's marginal at ({x},{a})")));
                    }
                }
            }
        }
        Ok(())
    }
}

/// `tr_A[(E ⊗ 𝕀) ρ]` for an operator `E` on Alice's factor.
pub(crate) fn bob_operator<T: Real>(state: &Operator<T>, alice_effect: &Operator<T>) -> Operator<T> {
    let da = alice_effect.dim();
    let db = state.dim() / da;
    let zero = Complex::new(T::zero(), T::zero());
    let mut out = vec![zero; db * db];
    for i in 0..da {
        for j in 0..da {
            let a = alice_effect.get(i, j);
            if a == zero {
                continue;
            }
            for k in 0..db {
                for l in 0..db {
                    out[k * db + l] = out[k * db + l] + a * state.get(j * db + k, i * db + l);
                }
            }
        }
    }
    Operator::new(db, out).expect("square by construction")
}

/// `Re tr(M E)`.
pub(crate) fn trace_product<T: Real>(m: &Operator<T>, effect: &Operator<T>) -> T {
    let n = m.dim();
    let mut acc = T::zero();
    for k in 0..n {
        for l in 0..n {
            acc = acc + (m.get(k, l) * effect.get(l, k)).re;
        }
    }
    acc
}

fn table_from<T: Real>(bob_ops: &[Vec<Operator<T>>], assembly: &MeasurementAssembly<T>) -> CorrelationTable<T> {
    let n_x = bob_ops.len();
    let n_a = bob_ops[0].len();
    let mut table = CorrelationTable::zeros(n_x, assembly.n_settings(), n_a, assembly.n_outcomes());
    for (x, per_outcome) in bob_ops.iter().enumerate() {
        for (a, m) in per_outcome.iter().enumerate() {
            for y in 0..assembly.n_settings() {
                for b in 0..assembly.n_outcomes() {
                    table.set(x, y, a, b, trace_product(m, assembly.effect(y, b)));
                }
            }
        }
    }
    table
}

impl<T: Real> RoutedStrategy<T> {
    /// Bob-side operators `tr_A[(A^x_a ⊗ 𝕀)ρ]` for every `(x, a)`.
    pub fn alice_steered(&self) -> Vec<Vec<Operator<T>>> {
        (0..self.alice.n_settings())
            .map(|x| (0..self.alice.n_outcomes()).map(|a| bob_operator(&self.state, self.alice.effect(x, a))).collect())
            .collect()
    }

    /// The distant device's effects under the uniform loss model.
    pub fn b1_with_loss(&self) -> MeasurementAssembly<T> {
        self.b1.with_loss(self.eta)
    }

    /// Born-rule correlation on both routes.
    pub fn correlation(&self) -> RoutedCorrelation<T> {
        let steered = self.alice_steered();
        RoutedCorrelation {
            n_copies: self.n_copies,
            short: table_from(&steered, &self.b0),
            long: table_from(&steered, &self.b1_with_loss()),
        }
    }

    /// Bob's states remotely prepared by Alice, keyed by `(x, a)`, with
    /// the probability `p_A(a|x)`. Outcomes with `p_A < 1e-14` are omitted.
    pub fn conditional_states(&self) -> BTreeMap<(usize, usize), (T, Operator<T>)> {
        let mut out = BTreeMap::new();
        for (x, per_outcome) in self.alice_steered().into_iter().enumerate() {
            for (a, m) in per_outcome.into_iter().enumerate() {
                let p = m.trace().re;
                if p < T::of(1e-14) {
                    continue;
                }
                out.insert((x, a), (p, m.scale(T::one() / p)));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_copy_effects_match_reference() {
        let (alice, bob) = ideal_chsh_measurements::<f64>(1).unwrap();
        assert_eq!(*alice.effect(0, 0), Operator::diagonal(&[1.0, 0.0]));
        assert_eq!(*alice.effect(0, 1), Operator::diagonal(&[0.0, 1.0]));
        let plus = PureState::plus_minus(1).projector();
        assert!(alice.effect(1, 0).max_abs_diff(&plus) < 1e-15);
        // (X+Z)/√2 eigenprojector for +1
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let expected = Operator::from_real(2, &[0.5 * (1.0 + h), 0.5 * h, 0.5 * h, 0.5 * (1.0 - h)]).unwrap();
        assert!(bob.effect(0, 0).max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn two_copy_effects_are_rank_one_projectors() {
        let (alice, bob) = ideal_chsh_measurements::<f64>(2).unwrap();
        for assembly in [&alice, &bob] {
            assert_eq!(assembly.n_settings(), 4);
            assert_eq!(assembly.n_outcomes(), 4);
            assert!(assembly.completeness_defect() < 1e-12);
            assert!(assembly.all_projective(1e-12));
            for s in 0..4 {
                for o in 0..4 {
                    let e = assembly.effect(s, o);
                    assert!((e.trace().re - 1.0).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn dimension_cap() {
        assert!(matches!(ideal_chsh_measurements::<f64>(0), Err(Error::DimensionCap(_))));
        assert!(matches!(ideal_chsh_measurements::<f64>(5), Err(Error::DimensionCap(_))));
    }

    #[test]
    fn strategy_kinds() {
        let bb84 = build_strategy::<f64>(StrategyKind::RBb84, 1, 1.0, 1.0).unwrap();
        assert_eq!(bb84.b1, bb84.alice);
        let chsh = build_strategy::<f64>(StrategyKind::RChsh, 2, 1.0, 1.0).unwrap();
        assert_eq!(chsh.b1, chsh.b0);
        assert_eq!(chsh.b1.n_settings(), 4);
        let mixed = build_strategy::<f64>(StrategyKind::RBb84Chsh, 1, 1.0, 1.0).unwrap();
        assert_eq!(mixed.b1.n_settings(), 4);
        assert_eq!(mixed.b1.setting(0), mixed.alice.setting(0));
        assert_eq!(mixed.b1.setting(1), mixed.alice.setting(1));
        assert_eq!(mixed.b1.setting(2), mixed.b0.setting(0));
        assert_eq!(mixed.b1.setting(3), mixed.b0.setting(1));
        assert!(build_strategy::<f64>(StrategyKind::RBb84Chsh, 2, 1.0, 1.0).is_err());
        assert!(build_strategy::<f64>(StrategyKind::RBb84, 1, 1.2, 1.0).is_err());
        assert!(build_strategy::<f64>(StrategyKind::RBb84, 1, 0.5, -0.1).is_err());
    }

    #[test]
    fn state_is_normalized_density() {
        for v in [0.0, 0.3, 1.0] {
            let s = build_strategy::<f64>(StrategyKind::RChsh, 2, 1.0, v).unwrap();
            assert!((s.state.trace().re - 1.0).abs() < 1e-12);
            assert!(s.state.is_psd(1e-10));
        }
    }

    #[test]
    fn chsh_win_probability_is_alpha() {
        let s = build_strategy::<f64>(StrategyKind::RChsh, 1, 1.0, 1.0).unwrap();
        let corr = s.correlation();
        let mut win = 0.0;
        for x in 0..2 {
            for y in 0..2 {
                for a in 0..2 {
                    for b in 0..2 {
                        if (x & y) == (a ^ b) {
                            win += corr.short.get(x, y, a, b);
                        }
                    }
                }
            }
        }
        assert!((win / 4.0 - crate::scalar::alpha::<f64>()).abs() < 1e-12);
    }

    #[test]
    fn zero_efficiency_never_clicks() {
        let s = build_strategy::<f64>(StrategyKind::RBb84, 2, 0.0, 1.0).unwrap();
        let corr = s.correlation();
        for y in 0..4 {
            assert!(corr.click_probability(y).abs() < 1e-14);
            assert!((corr.long.bob_marginal(0, y, corr.null_outcome()) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn white_noise_is_uniform() {
        let s = build_strategy::<f64>(StrategyKind::RChsh, 1, 1.0, 0.0).unwrap();
        let corr = s.correlation();
        assert!(corr.short.values().iter().all(|p| (p - 0.25).abs() < 1e-14));
    }

    #[test]
    fn conditional_states_ideal_and_noisy() {
        let s = build_strategy::<f64>(StrategyKind::RBb84, 1, 1.0, 1.0).unwrap();
        let states = s.conditional_states();
        assert_eq!(states.len(), 4);
        for (&(x, a), (p, rho)) in &states {
            assert!((p - 0.5).abs() < 1e-14);
            assert!(rho.max_abs_diff(s.alice.effect(x, a)) < 1e-12);
        }
        let noisy = build_strategy::<f64>(StrategyKind::RChsh, 2, 1.0, 0.0).unwrap();
        for (_, rho) in noisy.conditional_states().values() {
            assert!(rho.max_abs_diff(&Operator::identity(4).scale(0.25)) < 1e-14);
        }
    }

    #[test]
    fn kind_round_trips_through_text() {
        for kind in [StrategyKind::RBb84, StrategyKind::RChsh, StrategyKind::RBb84Chsh] {
            assert_eq!(kind.to_string().parse::<StrategyKind>().unwrap(), kind);
        }
        assert_eq!("r(BB84+CHSH)".parse::<StrategyKind>().unwrap(), StrategyKind::RBb84Chsh);
    }
}
