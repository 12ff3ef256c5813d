use std::cmp::Ordering;
use std::fmt;

use serde::Serialize;

use super::level::LetterClass;
use crate::scalar::Real;
use crate::strategies::RoutedStrategy;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Party {
    A,
    B0,
    B1,
}

/// A projector `party^{setting}_{outcome}`. The last outcome of every
/// setting is eliminated through completeness, so it never appears.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct OperatorSymbol {
    pub party: Party,
    pub setting: usize,
    pub outcome: usize,
}

impl fmt::Display for OperatorSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}[{},{}]", self.party, self.setting, self.outcome)
    }
}

/// Index into a [`SymbolTable`].
pub type Sym = u16;

/// A monomial as symbol indices. Canonical words list Alice's letters
/// first.
pub type Word = Vec<Sym>;

/// Setting and outcome counts of one device.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct DeviceShape {
    pub settings: usize,
    /// Outcomes that keep a symbol.
    pub kept_outcomes: usize,
}

/// The noncommuting variables of a routed scenario and the rewriting
/// rules that put monomials in canonical form:
///
/// * Alice's letters commute with Bob's;
/// * `PP = P`, and `PQ = 0` for different outcomes of one setting;
/// * with `commute_b1`, consecutive `B1` letters commute and are sorted.
#[derive(Clone, Debug)]
pub struct SymbolTable {
    symbols: Vec<OperatorSymbol>,
    commute_b1: bool,
}

impl SymbolTable {
    pub fn new(a: DeviceShape, b0: DeviceShape, b1: DeviceShape, commute_b1: bool) -> Self {
        let mut symbols = Vec::new();
        for (party, shape) in [(Party::A, a), (Party::B0, b0), (Party::B1, b1)] {
            for setting in 0..shape.settings {
                for outcome in 0..shape.kept_outcomes {
                    symbols.push(OperatorSymbol { party, setting, outcome });
                }
            }
        }
        assert!(symbols.len() < Sym::MAX as usize, "symbol table overflow");
        Self { symbols, commute_b1 }
    }

    /// Symbols of a strategy; `B₁` keeps every click outcome and drops `∅`.
    pub fn for_strategy<T: Real>(strategy: &RoutedStrategy<T>, commute_b1: bool) -> Self {
        let shape = |settings: usize, outcomes: usize| DeviceShape { settings, kept_outcomes: outcomes - 1 };
        Self::new(
            shape(strategy.alice.n_settings(), strategy.alice.n_outcomes()),
            shape(strategy.b0.n_settings(), strategy.b0.n_outcomes()),
            DeviceShape { settings: strategy.b1.n_settings(), kept_outcomes: strategy.b1.n_outcomes() },
            commute_b1,
        )
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn commute_b1(&self) -> bool {
        self.commute_b1
    }

    pub fn symbol(&self, s: Sym) -> OperatorSymbol {
        self.symbols[s as usize]
    }

    pub fn index_of(&self, symbol: OperatorSymbol) -> Option<Sym> {
        self.symbols.iter().position(|&s| s == symbol).map(|i| i as Sym)
    }

    pub fn of_class(&self, class: LetterClass) -> Vec<Sym> {
        (0..self.symbols.len() as Sym)
            .filter(|&s| match (class, self.symbol(s).party) {
                (LetterClass::A, Party::A) | (LetterClass::B0, Party::B0) | (LetterClass::B1, Party::B1) => true,
                (LetterClass::B, p) => p != Party::A,
                _ => false,
            })
            .collect()
    }

    pub fn describe(&self, word: &[Sym]) -> String {
        if word.is_empty() {
            return "1".into();
        }
        word.iter().map(|&s| self.symbol(s).to_string()).collect::<Vec<_>>().join(" ")
    }

    fn is_alice(&self, s: Sym) -> bool {
        self.symbol(s).party == Party::A
    }

    /// Appends `s` to a reduced word; `false` when the product vanishes.
    fn push_reduced(&self, out: &mut Word, s: Sym) -> bool {
        if let Some(&top) = out.last() {
            if top == s {
                return true;
            }
            let (p, q) = (self.symbol(top), self.symbol(s));
            if p.party == q.party && p.setting == q.setting {
                return false;
            }
        }
        out.push(s);
        true
    }

    fn reduce(&self, letters: impl IntoIterator<Item = Sym>) -> Option<Word> {
        let mut out = Word::new();
        for s in letters {
            if !self.push_reduced(&mut out, s) {
                return None;
            }
        }
        Some(out)
    }

    fn sort_b1_runs(&self, word: &mut [Sym]) {
        let mut start = 0;
        while start < word.len() {
            if self.symbol(word[start]).party != Party::B1 {
                start += 1;
                continue;
            }
            let mut end = start;
            while end < word.len() && self.symbol(word[end]).party == Party::B1 {
                end += 1;
            }
            word[start..end].sort_unstable();
            start = end;
        }
    }

    /// Canonical form of a product, or `None` for the zero monomial.
    pub fn canonical(&self, word: &[Sym]) -> Option<Word> {
        let mut alice = self.reduce(word.iter().copied().filter(|&s| self.is_alice(s)))?;
        let mut bob: Word = word.iter().copied().filter(|&s| !self.is_alice(s)).collect();
        loop {
            if self.commute_b1 {
                self.sort_b1_runs(&mut bob);
            }
            let next = self.reduce(bob.iter().copied())?;
            if next == bob {
                break;
            }
            bob = next;
        }
        alice.extend(bob);
        Some(alice)
    }

    /// `w†` of a canonical word: each party's letters reversed.
    pub fn adjoint(&self, word: &[Sym]) -> Word {
        let mut alice: Word = word.iter().copied().filter(|&s| self.is_alice(s)).collect();
        let mut bob: Word = word.iter().copied().filter(|&s| !self.is_alice(s)).collect();
        alice.reverse();
        bob.reverse();
        alice.extend(bob);
        alice
    }

    /// Key shared by `w` and `w†`; moments are taken real, so both carry
    /// the same value. `None` for the zero monomial.
    pub fn moment_key(&self, word: &[Sym]) -> Option<Word> {
        let w = self.canonical(word)?;
        let d = self.canonical(&self.adjoint(&w))?;
        Some(match shortlex(&w, &d) {
            Ordering::Greater => d,
            _ => w,
        })
    }
}

/// Length first, then lexicographic.
pub fn shortlex(a: &[Sym], b: &[Sym]) -> Ordering {
    a.len().cmp(&b.len()).then_with(|| a.cmp(b))
}
