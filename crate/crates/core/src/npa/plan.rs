use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::level::parse_level;
use super::problem::{build_problem, BuildOptions, MomentProblem};
use super::sdpa::write_sdpa;
use crate::error::{Error, Result};
use crate::strategies::{build_strategy, StrategyKind};

/// Largest supported bisection depth.
pub const MAX_ITERATIONS: usize = 20;

/// How the solver's verdict steers the search.
pub const DECISION_RULE: &str = "infeasible => B1 certified not jointly measurable at eta => search lower";

/// One feasibility probe of the bisection tree. Nodes use heap numbering
/// from 1; node `k` branches to `2k` (infeasible, lower half) and
/// `2k + 1` (feasible, upper half).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub node: usize,
    pub depth: usize,
    pub eta: f64,
    pub eta_lo: f64,
    pub eta_hi: f64,
    pub file: String,
    pub sidecar: String,
    pub on_infeasible: Option<usize>,
    pub on_feasible: Option<usize>,
}

/// Every probe a bisection for `η*` may need, listed breadth first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BisectionPlan {
    pub strategy_kind: StrategyKind,
    pub n_copies: usize,
    pub visibility: f64,
    pub level: String,
    pub eta_lo: f64,
    pub eta_hi: f64,
    pub iterations: usize,
    pub decision_rule: String,
    pub probes: Vec<Probe>,
}

/// Record written next to every exported problem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemSidecar {
    pub strategy_kind: StrategyKind,
    pub n_copies: usize,
    pub visibility: f64,
    pub eta: f64,
    pub level: String,
    pub level_interpretation: String,
    pub basis_size: usize,
    pub constraint_count: usize,
    pub dropped_data_constraints: usize,
    pub commute_b1: bool,
    pub constrain_long_path: bool,
    pub sdpa_file: String,
    pub decision_rule: String,
}

impl ProblemSidecar {
    pub fn new(problem: &MomentProblem, sdpa_file: &str) -> Self {
        Self {
            strategy_kind: problem.kind,
            n_copies: problem.n_copies,
            visibility: problem.visibility,
            eta: problem.eta,
            level: problem.level.spec.clone(),
            level_interpretation: problem.level.interpretation(),
            basis_size: problem.size(),
            constraint_count: problem.constraint_count(),
            dropped_data_constraints: problem.dropped_data,
            commute_b1: problem.options.commute_b1,
            constrain_long_path: problem.options.constrain_long_path,
            sdpa_file: sdpa_file.to_string(),
            decision_rule: DECISION_RULE.to_string(),
        }
    }
}

/// File stem shared by every probe of one `(kind, N, v, level)` curve
/// point.
pub fn file_stem(kind: StrategyKind, n_copies: usize, visibility: f64, level: &str) -> String {
    format!("{kind}_n{n_copies}_v{visibility:.6}_L{level}")
}

pub fn bisection_plan(
    kind: StrategyKind,
    n_copies: usize,
    visibility: f64,
    level: &str,
    eta_lo: f64,
    eta_hi: f64,
    iterations: usize,
) -> Result<BisectionPlan> {
    if !(0.0 <= eta_lo && eta_lo < eta_hi && eta_hi <= 1.0) {
        return Err(Error::InvalidParameter(format!("need 0 ≤ η_lo < η_hi ≤ 1, got [{eta_lo}, {eta_hi}]")));
    }
    if !(0.0..=1.0).contains(&visibility) {
        return Err(Error::InvalidParameter(format!("visibility {visibility} outside [0, 1]")));
    }
    if iterations > MAX_ITERATIONS {
        return Err(Error::InvalidParameter(format!("at most {MAX_ITERATIONS} iterations")));
    }
    parse_level(level)?;
    let stem = file_stem(kind, n_copies, visibility, level);
    let width = (1usize << iterations).to_string().len();
    let mut probes = Vec::with_capacity((1 << iterations) - 1);
    let mut intervals = vec![(eta_lo, eta_hi)];
    for depth in 0..iterations {
        let first = 1usize << depth;
        let mut next = Vec::with_capacity(intervals.len() * 2);
        for (offset, &(lo, hi)) in intervals.iter().enumerate() {
            let node = first + offset;
            let eta = 0.5 * (lo + hi);
            let leaf = depth + 1 == iterations;
            let name = format!("{stem}_p{node:0width$}");
            probes.push(Probe {
                node,
                depth,
                eta,
                eta_lo: lo,
                eta_hi: hi,
                file: format!("{name}.dat-s"),
                sidecar: format!("{name}.json"),
                on_infeasible: (!leaf).then_some(2 * node),
                on_feasible: (!leaf).then_some(2 * node + 1),
            });
            next.push((lo, eta));
            next.push((eta, hi));
        }
        intervals = next;
    }
    Ok(BisectionPlan {
        strategy_kind: kind,
        n_copies,
        visibility,
        level: level.to_string(),
        eta_lo,
        eta_hi,
        iterations,
        decision_rule: DECISION_RULE.to_string(),
        probes,
    })
}

/// Writes one problem as `<stem>.dat-s` plus `<stem>.json` under `dir`.
pub fn export_problem(problem: &MomentProblem, dir: &Path, sdpa_name: &str, sidecar_name: &str) -> Result<[PathBuf; 2]> {
    let sdpa = dir.join(sdpa_name);
    write_sdpa(problem, &sdpa)?;
    let sidecar = dir.join(sidecar_name);
    std::fs::write(&sidecar, serde_json::to_string_pretty(&ProblemSidecar::new(problem, sdpa_name))? + "\n")?;
    Ok([sdpa, sidecar])
}

/// Builds and writes every probe of `plan`, then the plan itself as
/// `<stem>_plan.json`. Returns the written paths.
pub fn export_plan(plan: &BisectionPlan, options: BuildOptions, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let strategy = build_strategy::<f64>(plan.strategy_kind, plan.n_copies, 1.0, plan.visibility)?;
    let mut written = Vec::new();
    for probe in &plan.probes {
        let problem = build_problem(&strategy, probe.eta, &plan.level, options)?;
        written.extend(export_problem(&problem, dir, &probe.file, &probe.sidecar)?);
    }
    let stem = file_stem(plan.strategy_kind, plan.n_copies, plan.visibility, &plan.level);
    let path = dir.join(format!("{stem}_plan.json"));
    std::fs::write(&path, serde_json::to_string_pretty(plan)? + "\n")?;
    written.push(path);
    Ok(written)
}
