use std::collections::HashMap;

use serde::Serialize;

use super::level::{parse_level, Level};
use super::monomial::{OperatorSymbol, Party, Sym, SymbolTable, Word};
use crate::error::{Error, Result};
use crate::linalg::symmetric_min_eigenvalue;
use crate::operator::Operator;
use crate::scalar::Real;
use crate::strategies::{RoutedStrategy, StrategyKind};

/// Basis sizes above this are rejected.
pub const MAX_BASIS: usize = 20_000;

const ZERO: u32 = u32::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct BuildOptions {
    /// Impose `[B₁^y, B₁^{y'}] = 0`, the joint-measurability hypothesis.
    pub commute_b1: bool,
    /// Also fix the long-path correlations at the probed efficiency.
    pub constrain_long_path: bool,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self { commute_b1: true, constrain_long_path: true }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintKind {
    Normalization,
    Identification,
    ZeroMonomial,
    Data,
}

/// `Σ coeff · Y_{ij} = target` over upper-triangle positions of the
/// moment matrix `Y` (0-based).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LinearConstraint {
    pub kind: ConstraintKind,
    pub terms: Vec<(usize, usize, f64)>,
    pub target: f64,
}

/// Moment-matrix feasibility problem: `Y ⪰ 0`, `Y_{00} = 1`, entries
/// with the same moment equal, vanishing monomials zero, data fixed.
#[derive(Clone, Debug)]
pub struct MomentProblem {
    pub level: Level,
    pub kind: StrategyKind,
    pub n_copies: usize,
    pub visibility: f64,
    pub eta: f64,
    pub options: BuildOptions,
    pub table: SymbolTable,
    pub basis: Vec<Word>,
    /// Moment keys by id.
    pub moments: Vec<Word>,
    /// `n × n` moment ids; `u32::MAX` marks a zero monomial.
    entries: Vec<u32>,
    pub constraints: Vec<LinearConstraint>,
    /// Data constraints whose moment is absent from the matrix.
    pub dropped_data: usize,
}

impl MomentProblem {
    pub fn size(&self) -> usize {
        self.basis.len()
    }

    /// Moment id of `Y_{ij}`, `None` for a zero monomial.
    pub fn moment_id(&self, i: usize, j: usize) -> Option<usize> {
        let id = self.entries[i * self.size() + j];
        (id != ZERO).then_some(id as usize)
    }

    pub fn constraint_count(&self) -> usize {
        self.constraints.len()
    }

    pub fn count(&self, kind: ConstraintKind) -> usize {
        self.constraints.iter().filter(|c| c.kind == kind).count()
    }

    pub fn describe_basis(&self) -> Vec<String> {
        self.basis.iter().map(|w| self.table.describe(w)).collect()
    }
}

fn generate_basis(table: &SymbolTable, level: &Level) -> Result<Vec<Word>> {
    let mut basis = vec![Word::new()];
    let mut seen: HashMap<Word, ()> = HashMap::from([(Word::new(), ())]);
    let mut push = |word: Word, basis: &mut Vec<Word>| -> Result<bool> {
        if seen.contains_key(&word) {
            return Ok(false);
        }
        seen.insert(word.clone(), ());
        basis.push(word);
        if basis.len() > MAX_BASIS {
            return Err(Error::LevelTooHigh(basis.len()));
        }
        Ok(true)
    };
    let mut frontier = vec![Word::new()];
    for length in 1..=level.depth {
        let mut next = Vec::new();
        for w in &frontier {
            for s in 0..table.len() as Sym {
                let mut product = w.clone();
                product.push(s);
                if let Some(c) = table.canonical(&product) {
                    if c.len() == length && push(c.clone(), &mut basis)? {
                        next.push(c);
                    }
                }
            }
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    for shape in &level.extras {
        let classes: Vec<Vec<Sym>> = shape.iter().map(|&c| table.of_class(c)).collect();
        let mut words = vec![Word::new()];
        for class in &classes {
            words = words
                .iter()
                .flat_map(|w| {
                    class.iter().map(move |&s| {
                        let mut next = w.clone();
                        next.push(s);
                        next
                    })
                })
                .collect();
        }
        for w in words {
            if let Some(c) = table.canonical(&w) {
                push(c, &mut basis)?;
            }
        }
    }
    Ok(basis)
}

fn sym_of(table: &SymbolTable, party: Party, setting: usize, outcome: usize) -> Sym {
    table.index_of(OperatorSymbol { party, setting, outcome }).expect("symbol exists")
}

/// Builds the feasibility problem for `strategy` with the distant device
/// at efficiency `eta`. Infeasibility at `commute_b1 = true` certifies
/// that `B₁` is not jointly measurable.
pub fn build_problem<T: Real>(
    strategy: &RoutedStrategy<T>,
    eta: T,
    level: &str,
    options: BuildOptions,
) -> Result<MomentProblem> {
    if !(eta >= T::zero() && eta <= T::one()) {
        return Err(Error::InvalidParameter(format!("η = {eta} outside [0, 1]")));
    }
    let level = parse_level(level)?;
    let table = SymbolTable::for_strategy(strategy, options.commute_b1);
    let basis = generate_basis(&table, &level)?;
    let n = basis.len();

    let mut ids: HashMap<Word, u32> = HashMap::new();
    let mut moments = Vec::new();
    let mut entries = vec![ZERO; n * n];
    let adjoints: Vec<Word> = basis.iter().map(|w| table.adjoint(w)).collect();
    for i in 0..n {
        for j in i..n {
            let mut word = adjoints[i].clone();
            word.extend_from_slice(&basis[j]);
            let id = match table.moment_key(&word) {
                None => ZERO,
                Some(key) => *ids.entry(key.clone()).or_insert_with(|| {
                    moments.push(key);
                    (moments.len() - 1) as u32
                }),
            };
            entries[i * n + j] = id;
            entries[j * n + i] = id;
        }
    }

    let mut constraints = vec![LinearConstraint {
        kind: ConstraintKind::Normalization,
        terms: vec![(0, 0, 1.0)],
        target: 1.0,
    }];
    let mut representative: Vec<Option<(usize, usize)>> = vec![None; moments.len()];
    let mut zeros = Vec::new();
    for i in 0..n {
        for j in i..n {
            let id = entries[i * n + j];
            if id == ZERO {
                zeros.push((i, j));
                continue;
            }
            match representative[id as usize] {
                None => representative[id as usize] = Some((i, j)),
                Some((ri, rj)) => constraints.push(LinearConstraint {
                    kind: ConstraintKind::Identification,
                    terms: vec![(ri, rj, 1.0), (i, j, -1.0)],
                    target: 0.0,
                }),
            }
        }
    }
    for (i, j) in zeros {
        constraints.push(LinearConstraint { kind: ConstraintKind::ZeroMonomial, terms: vec![(i, j, 1.0)], target: 0.0 });
    }

    let mut probed = strategy.clone();
    probed.eta = eta;
    let corr = probed.correlation();
    let mut data: Vec<(Word, f64)> = Vec::new();
    let (short, long) = (&corr.short, &corr.long);
    let kept_a = strategy.alice.n_outcomes() - 1;
    let kept_b0 = strategy.b0.n_outcomes() - 1;
    let clicks = strategy.b1.n_outcomes();
    for x in 0..short.n_x {
        for a in 0..kept_a {
            data.push((vec![sym_of(&table, Party::A, x, a)], short.alice_marginal(x, 0, a).as_f64()));
        }
    }
    for y in 0..short.n_y {
        for b in 0..kept_b0 {
            data.push((vec![sym_of(&table, Party::B0, y, b)], short.bob_marginal(0, y, b).as_f64()));
        }
    }
    for x in 0..short.n_x {
        for a in 0..kept_a {
            for y in 0..short.n_y {
                for b in 0..kept_b0 {
                    let w = vec![sym_of(&table, Party::A, x, a), sym_of(&table, Party::B0, y, b)];
                    data.push((w, short.get(x, y, a, b).as_f64()));
                }
            }
        }
    }
    if options.constrain_long_path {
        for y in 0..long.n_y {
            for b in 0..clicks {
                data.push((vec![sym_of(&table, Party::B1, y, b)], long.bob_marginal(0, y, b).as_f64()));
            }
        }
        for x in 0..long.n_x {
            for a in 0..kept_a {
                for y in 0..long.n_y {
                    for b in 0..clicks {
                        let w = vec![sym_of(&table, Party::A, x, a), sym_of(&table, Party::B1, y, b)];
                        data.push((w, long.get(x, y, a, b).as_f64()));
                    }
                }
            }
        }
    }
    let mut dropped_data = 0;
    for (word, target) in data {
        let located = table
            .moment_key(&word)
            .and_then(|key| ids.get(&key))
            .and_then(|&id| representative[id as usize]);
        match located {
            Some((i, j)) => {
                constraints.push(LinearConstraint { kind: ConstraintKind::Data, terms: vec![(i, j, 1.0)], target })
            }
            None => dropped_data += 1,
        }
    }

    Ok(MomentProblem {
        level,
        kind: strategy.kind,
        n_copies: strategy.n_copies,
        visibility: strategy.visibility.as_f64(),
        eta: eta.as_f64(),
        options,
        table,
        basis,
        moments,
        entries,
        constraints,
        dropped_data,
    })
}

/// Outcome of substituting a strategy's own moments into a problem.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HonestMomentCheck {
    pub min_eigenvalue: f64,
    /// Largest violation of any equality constraint.
    pub max_residual: f64,
}

/// Fills the moment matrix with `Re tr(ρ w)` of each moment's
/// representative word, using the strategy's effects (the distant ones
/// thinned by the problem's `η`), and reports its smallest eigenvalue and
/// the worst constraint residual. Exact moments of a realization that
/// obeys the rewriting rules give a PSD matrix with zero residual.
pub fn honest_moment_check<T: Real>(problem: &MomentProblem, strategy: &RoutedStrategy<T>) -> Result<HonestMomentCheck> {
    let da = strategy.alice.dim();
    let db = strategy.b0.dim();
    let id_a = Operator::<T>::identity(da);
    let id_b = Operator::<T>::identity(db);
    let eta = T::of(problem.eta);
    let ops: Vec<Operator<T>> = (0..problem.table.len() as Sym)
        .map(|s| {
            let sym = problem.table.symbol(s);
            match sym.party {
                Party::A => strategy.alice.effect(sym.setting, sym.outcome).kron(&id_b),
                Party::B0 => id_a.kron(strategy.b0.effect(sym.setting, sym.outcome)),
                Party::B1 => id_a.kron(&strategy.b1.effect(sym.setting, sym.outcome).scale(eta)),
            }
        })
        .collect();
    let values: Vec<f64> = problem
        .moments
        .iter()
        .map(|word| {
            let product = word.iter().fold(Operator::identity(da * db), |acc, &s| &acc * &ops[s as usize]);
            (&strategy.state * &product).trace().re.as_f64()
        })
        .collect();
    let n = problem.size();
    let mut matrix = vec![0.0f64; n * n];
    for i in 0..n {
        for j in 0..n {
            matrix[i * n + j] = problem.moment_id(i, j).map_or(0.0, |id| values[id]);
        }
    }
    let max_residual = problem
        .constraints
        .iter()
        .map(|c| (c.terms.iter().map(|&(i, j, k)| k * matrix[i * n + j]).sum::<f64>() - c.target).abs())
        .fold(0.0, f64::max);
    let min_eigenvalue = symmetric_min_eigenvalue(n, &mut matrix);
    Ok(HonestMomentCheck { min_eigenvalue, max_residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::strategies::build_strategy;

    fn rbb84() -> RoutedStrategy<f64> {
        build_strategy(StrategyKind::RBb84, 1, 1.0, 1.0).unwrap()
    }

    #[test]
    fn basis_sizes() {
        let s = rbb84();
        let p = build_problem(&s, 1.0, "1", BuildOptions::default()).unwrap();
        assert_eq!(p.size(), 9);
        let p = build_problem(&s, 1.0, "1+AB", BuildOptions::default()).unwrap();
        assert_eq!(p.size(), 21);
        let p = build_problem(&s, 1.0, "0", BuildOptions::default()).unwrap();
        assert_eq!(p.size(), 1);
        assert_eq!(p.constraint_count(), 1);
        assert_eq!(p.dropped_data, 2 + 2 + 4 + 4 + 8);
    }

    #[test]
    fn level_one_data_all_present() {
        let p = build_problem(&rbb84(), 0.7, "1", BuildOptions::default()).unwrap();
        assert_eq!(p.dropped_data, 0);
        assert_eq!(p.count(ConstraintKind::Data), 2 + 2 + 4 + 4 + 8);
        assert_eq!(p.moment_id(0, 0), Some(0));
    }

    #[test]
    fn honest_moments_are_consistent() {
        let s = rbb84();
        let free = BuildOptions { commute_b1: false, constrain_long_path: true };
        for level in ["1", "1+AB"] {
            let p = build_problem(&s, 1.0, level, free).unwrap();
            let check = honest_moment_check(&p, &s).unwrap();
            assert!(check.min_eigenvalue >= -1e-8, "{level}: {check:?}");
            assert!(check.max_residual < 1e-12, "{level}: {check:?}");
        }
    }

    #[test]
    fn commutation_excludes_honest_moments() {
        let s = rbb84();
        let p = build_problem(&s, 1.0, "1+AB", BuildOptions::default()).unwrap();
        assert!(honest_moment_check(&p, &s).unwrap().min_eigenvalue < -1e-3);
    }

    #[test]
    fn guards() {
        assert!(matches!(build_problem(&rbb84(), 1.0, "1+", BuildOptions::default()), Err(Error::LevelParse { .. })));
        assert!(build_problem(&rbb84(), 1.5, "1", BuildOptions::default()).is_err());
        let big = build_strategy::<f64>(StrategyKind::RChsh, 2, 1.0, 1.0).unwrap();
        assert!(matches!(build_problem(&big, 1.0, "4", BuildOptions::default()), Err(Error::LevelTooHigh(_))));
    }
}
