//! Moment-matrix (NPA) feasibility problems for the distant device,
//! exported in SDPA sparse format together with bisection plans for the
//! critical efficiency. Solving is left to an external SDP solver.

mod level;
mod monomial;
mod plan;
mod problem;
mod sdpa;

pub use level::{parse_level, LetterClass, Level};
pub use monomial::{shortlex, DeviceShape, OperatorSymbol, Party, Sym, SymbolTable, Word};
pub use plan::{
    bisection_plan, export_plan, export_problem, file_stem, BisectionPlan, Probe, ProblemSidecar, DECISION_RULE,
    MAX_ITERATIONS,
};
pub use problem::{
    build_problem, honest_moment_check, BuildOptions, ConstraintKind, HonestMomentCheck, LinearConstraint,
    MomentProblem, MAX_BASIS,
};
pub use sdpa::{format_number, format_sdpa, parse_sdpa, read_sdpa, write_sdpa, SdpaData, SdpaEntry};
