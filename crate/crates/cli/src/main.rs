//! `routed-bell`: batch front-end for scores, JM certification scans,
//! robustness bounds and NPA problem export.
//!
//! Exit codes: 0 success, 1 usage error, 2 computation error, 3 scan ran
//! but did not verify the bound.

mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use routed_bell::jm::{gram_bound_scan, scan_profile, ScanOptions, ScanProgress};
use routed_bell::npa::{bisection_plan, build_problem, export_plan, export_problem, file_stem, BuildOptions, ProblemSidecar};
use routed_bell::{
    alpha, beta, build_strategy, critical_efficiency_closed_form, penalized_score, robust_eta_star_from_delta, Family, RobustnessInput, StrategyKind,
};

use output::{Format, Metadata};

#[derive(Parser, Debug)]
#[command(name = "routed-bell", version, about = "Detection-efficiency thresholds for routed Bell experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Penalized Bell scores of an ideal strategy against the JM threshold.
    Score(ScoreArgs),
    /// Exhaustive click-pattern scan certifying the JM threshold at q.
    JmScan(JmScanArgs),
    /// Closed-form η* at v = 1 and SDPA bisection problems over a v grid.
    EtaScan(EtaScanArgs),
    /// Robust critical efficiency from a self-testing error bound.
    Robust(RobustArgs),
    /// Write a single NPA feasibility problem and its sidecar.
    ExportNpa(ExportNpaArgs),
}

#[derive(Args, Debug, Serialize)]
struct ScoreArgs {
    #[arg(long, default_value = "rbb84")]
    strategy: String,
    #[arg(long = "n", default_value_t = 1)]
    n_copies: usize,
    #[arg(long, default_value_t = 1.0)]
    eta: f64,
    #[arg(long = "v", default_value_t = 1.0)]
    visibility: f64,
    /// Penalty; defaults to the lower end of the proven window.
    #[arg(long)]
    q: Option<f64>,
    /// Functional family; defaults to the one matching the strategy.
    #[arg(long)]
    family: Option<String>,
    #[arg(long, value_enum, default_value = "csv")]
    #[serde(skip)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct JmScanArgs {
    #[arg(long, default_value = "bb84")]
    family: String,
    #[arg(long = "n", default_value_t = 1)]
    n_copies: usize,
    #[arg(long)]
    q: Option<f64>,
    /// Worker threads, or `max`. `ROUTED_BELL_THREADS` takes precedence.
    #[arg(long)]
    workers: Option<String>,
    /// Scan one pattern per outcome-relabeling orbit.
    #[arg(long)]
    prune: bool,
    /// Report progress on stderr.
    #[arg(long)]
    progress: bool,
    /// Also run the Gram-bound scan.
    #[arg(long)]
    gram: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct EtaScanArgs {
    #[arg(long, default_value = "rbb84")]
    strategy: String,
    #[arg(long = "n", default_value_t = 1)]
    n_copies: usize,
    #[arg(long, default_value = "1+AB")]
    level: String,
    /// Comma-separated visibilities; defaults to 0, 0.1, …, 1.
    #[arg(long = "v-grid", value_delimiter = ',')]
    v_grid: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0.0)]
    eta_lo: f64,
    #[arg(long, default_value_t = 1.0)]
    eta_hi: f64,
    #[arg(long, default_value_t = 1)]
    iterations: usize,
    /// Do not impose commutation of the distant device's measurements.
    #[arg(long)]
    no_commute: bool,
    /// Do not fix the long-path correlations.
    #[arg(long)]
    no_long_path: bool,
    #[arg(long, value_enum, default_value = "csv")]
    #[serde(skip)]
    format: Format,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct RobustArgs {
    #[arg(long = "n", default_value_t = 1)]
    n_copies: usize,
    /// Self-testing error f(N, ε).
    #[arg(long, conflicts_with = "delta")]
    f: Option<f64>,
    /// Use this δ directly instead of deriving it from f.
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    epsilon: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct ExportNpaArgs {
    #[arg(long, default_value = "rbb84")]
    strategy: String,
    #[arg(long = "n", default_value_t = 1)]
    n_copies: usize,
    #[arg(long = "v", default_value_t = 1.0)]
    visibility: f64,
    #[arg(long, default_value_t = 1.0)]
    eta: f64,
    #[arg(long, default_value = "1")]
    level: String,
    #[arg(long)]
    no_commute: bool,
    #[arg(long)]
    no_long_path: bool,
    #[arg(long)]
    out: PathBuf,
}

enum Failure {
    Usage(String),
    Computation(String),
}

impl From<routed_bell::Error> for Failure {
    fn from(e: routed_bell::Error) -> Self {
        Failure::Computation(e.to_string())
    }
}

type Outcome = Result<ExitCode, Failure>;

fn computation(e: String) -> Failure {
    Failure::Computation(e)
}

fn unit_range(name: &str, value: f64) -> Result<(), Failure> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Failure::Usage(format!("{name} = {value} outside [0, 1]")))
    }
}

fn copies(n: usize) -> Result<(), Failure> {
    if n == 0 {
        return Err(Failure::Usage("--n must be at least 1".into()));
    }
    Ok(())
}

fn parse_kind(s: &str) -> Result<StrategyKind, Failure> {
    s.parse().map_err(|e: routed_bell::Error| Failure::Usage(e.to_string()))
}

fn parse_family(s: &str) -> Result<Family, Failure> {
    s.parse().map_err(|e: routed_bell::Error| Failure::Usage(e.to_string()))
}

fn default_q(family: Family, n_copies: usize) -> f64 {
    match family {
        Family::Bb84 => std::f64::consts::FRAC_1_SQRT_2,
        Family::Chsh => alpha::<f64>().powi(n_copies as i32 - 1) * beta::<f64>(),
    }
}

fn nonnegative_q(q: f64) -> Result<f64, Failure> {
    if q >= 0.0 {
        Ok(q)
    } else {
        Err(Failure::Usage(format!("q = {q} must be nonnegative")))
    }
}

fn resolve_workers(flag: Option<&str>) -> Result<usize, Failure> {
    if let Ok(env) = std::env::var("ROUTED_BELL_THREADS") {
        return match env.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(Failure::Usage(format!("ROUTED_BELL_THREADS = `{env}` is not a positive integer"))),
        };
    }
    match flag {
        None | Some("max") => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
        Some(s) => match s.parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(Failure::Usage(format!("--workers `{s}` is neither a positive integer nor `max`"))),
        },
    }
}

#[derive(Serialize)]
struct ScoreRow {
    functional: String,
    n_copies: usize,
    eta: f64,
    visibility: f64,
    q: f64,
    value: f64,
    ideal: f64,
    jm_threshold: f64,
    in_proven_window: bool,
    certified: bool,
    critical_efficiency: Option<f64>,
}

fn cmd_score(args: ScoreArgs) -> Outcome {
    copies(args.n_copies)?;
    unit_range("--eta", args.eta)?;
    unit_range("--v", args.visibility)?;
    let kind = parse_kind(&args.strategy)?;
    let family = match (&args.family, kind) {
        (Some(f), _) => parse_family(f)?,
        (None, StrategyKind::RBb84) => Family::Bb84,
        (None, StrategyKind::RChsh) => Family::Chsh,
        (None, StrategyKind::RBb84Chsh) => {
            return Err(Failure::Usage("r(BB84+CHSH) has no product functional; pass --family explicitly".into()))
        }
    };
    let q = nonnegative_q(args.q.unwrap_or_else(|| default_q(family, args.n_copies)))?;
    let strategy = build_strategy::<f64>(kind, args.n_copies, args.eta, args.visibility)?;
    let mut corr = strategy.correlation();
    if kind == StrategyKind::RBb84Chsh {
        // B₁ lists Alice's bases first, then B₀'s; score the matching pair.
        let settings = match family {
            Family::Bb84 => [0, 1],
            Family::Chsh => [2, 3],
        };
        corr.long = corr.long.select_settings(&settings)?;
    }
    let score = penalized_score(&corr, family, q)?;
    let row = ScoreRow {
        functional: format!("{family}_penalized"),
        n_copies: args.n_copies,
        eta: args.eta,
        visibility: args.visibility,
        q,
        value: score.value,
        ideal: score.ideal_value,
        jm_threshold: score.jm_threshold,
        in_proven_window: score.in_proven_window,
        certified: score.certified(),
        critical_efficiency: critical_efficiency_closed_form(family, args.n_copies, q).ok(),
    };
    let metadata = Metadata::new("score", &args);
    let text = match args.format {
        Format::Csv => output::csv(&metadata, &[row]),
        Format::Json => output::json(&metadata, &vec![row]),
    }
    .map_err(computation)?;
    let name = match args.format {
        Format::Csv => "score.csv",
        Format::Json => "score.json",
    };
    output::emit(&text, args.out.as_deref(), name).map_err(computation)?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct ScanConfig<'a> {
    #[serde(flatten)]
    args: &'a JmScanArgs,
    resolved_q: f64,
    resolved_workers: usize,
}

#[derive(Serialize)]
struct ScanOutput<R: Serialize, G: Serialize> {
    #[serde(flatten)]
    certification: R,
    #[serde(skip_serializing_if = "Option::is_none")]
    gram: Option<G>,
}

fn cmd_jm_scan(args: JmScanArgs) -> Outcome {
    copies(args.n_copies)?;
    let family = parse_family(&args.family)?;
    let q = nonnegative_q(args.q.unwrap_or_else(|| default_q(family, args.n_copies)))?;
    let workers = resolve_workers(args.workers.as_deref())?;
    let report_progress = |p: ScanProgress| eprintln!("scanned {}/{} patterns", p.scanned, p.total);
    let options = ScanOptions {
        workers,
        prune: args.prune,
        progress: if args.progress { Some(&report_progress) } else { None },
    };
    let report = scan_profile::<f64>(family, args.n_copies, options)?.report(q);
    let gram = if args.gram { Some(gram_bound_scan::<f64>(family, args.n_copies, q, options)?) } else { None };
    let verified = report.verified;
    let metadata = Metadata::new("jm-scan", ScanConfig { args: &args, resolved_q: q, resolved_workers: workers });
    let text = output::json(&metadata, &ScanOutput { certification: report, gram }).map_err(computation)?;
    output::emit(&text, args.out.as_deref(), "jm-scan.json").map_err(computation)?;
    Ok(if verified { ExitCode::SUCCESS } else { ExitCode::from(3) })
}

#[derive(Serialize)]
struct EtaRow {
    visibility: f64,
    closed_form_eta_star: Option<f64>,
    level: String,
    probes: usize,
    first_problem: Option<String>,
    plan_file: String,
}

fn default_grid() -> Vec<f64> {
    (0..=10).map(|i| i as f64 / 10.0).collect()
}

fn cmd_eta_scan(args: EtaScanArgs) -> Outcome {
    copies(args.n_copies)?;
    let kind = parse_kind(&args.strategy)?;
    let grid = args.v_grid.clone().unwrap_or_else(default_grid);
    for &v in &grid {
        unit_range("visibility", v)?;
    }
    let options = BuildOptions { commute_b1: !args.no_commute, constrain_long_path: !args.no_long_path };
    let closed_form_family = match kind {
        StrategyKind::RBb84 => Some(Family::Bb84),
        StrategyKind::RChsh => Some(Family::Chsh),
        StrategyKind::RBb84Chsh => None,
    };
    let mut rows = Vec::new();
    for &v in &grid {
        let plan = bisection_plan(kind, args.n_copies, v, &args.level, args.eta_lo, args.eta_hi, args.iterations)
            .map_err(|e| match e {
                routed_bell::Error::LevelParse { .. } | routed_bell::Error::InvalidParameter(_) => {
                    Failure::Usage(e.to_string())
                }
                other => other.into(),
            })?;
        let written = export_plan(&plan, options, &args.out)?;
        let closed_form = match closed_form_family {
            Some(family) if v == 1.0 => {
                Some(critical_efficiency_closed_form(family, args.n_copies, default_q(family, args.n_copies))?)
            }
            _ => None,
        };
        rows.push(EtaRow {
            visibility: v,
            closed_form_eta_star: closed_form,
            level: args.level.clone(),
            probes: plan.probes.len(),
            first_problem: plan.probes.first().map(|p| p.file.clone()),
            plan_file: file_name(written.last().expect("plan file written")),
        });
    }
    let metadata = Metadata::new("eta-scan", &args);
    let (text, name) = match args.format {
        Format::Csv => (output::csv(&metadata, &rows), "eta-scan.csv"),
        Format::Json => (output::json(&metadata, &rows), "eta-scan.json"),
    };
    output::emit(&text.map_err(computation)?, Some(&args.out), name).map_err(computation)?;
    Ok(ExitCode::SUCCESS)
}

fn file_name(path: &Path) -> String {
    path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

#[derive(Serialize)]
struct RobustReport {
    delta: f64,
    delta_source: &'static str,
    q: f64,
    eta_star_idealized: f64,
    eta_star_linear_translation: f64,
    warnings: Vec<String>,
}

#[derive(Serialize)]
struct ErrorReport {
    error: String,
}

fn cmd_robust(args: RobustArgs) -> Outcome {
    copies(args.n_copies)?;
    if args.epsilon < 0.0 {
        return Err(Failure::Usage("--epsilon must be nonnegative".into()));
    }
    let metadata = Metadata::new("robust", &args);
    let computed = (|| -> routed_bell::Result<RobustReport> {
        let (delta, source, warnings) = match (args.f, args.delta) {
            (_, Some(delta)) => (delta, "delta", Vec::new()),
            (f, None) => {
                let input = RobustnessInput {
                    n_copies: args.n_copies,
                    epsilon: args.epsilon,
                    f_value: f.unwrap_or(0.0),
                    linear_translation: false,
                };
                let delta = routed_bell::delta_bound(&input)?;
                (delta, if f.is_some() { "f" } else { "default f = 0" }, input.warnings())
            }
        };
        let idealized = robust_eta_star_from_delta(args.n_copies, delta, args.epsilon, false)?;
        let linear = robust_eta_star_from_delta(args.n_copies, delta, args.epsilon, true)?;
        Ok(RobustReport {
            delta,
            delta_source: source,
            q: idealized.q,
            eta_star_idealized: idealized.eta_star,
            eta_star_linear_translation: linear.eta_star,
            warnings,
        })
    })();
    match computed {
        Ok(report) => {
            let text = output::json(&metadata, &report).map_err(computation)?;
            output::emit(&text, args.out.as_deref(), "robust.json").map_err(computation)?;
            Ok(ExitCode::SUCCESS)
        }
        Err(e) => {
            let text = output::json(&metadata, &ErrorReport { error: e.to_string() }).map_err(computation)?;
            output::emit(&text, args.out.as_deref(), "robust.json").map_err(computation)?;
            Err(Failure::Computation(e.to_string()))
        }
    }
}

fn cmd_export_npa(args: ExportNpaArgs) -> Outcome {
    copies(args.n_copies)?;
    unit_range("--eta", args.eta)?;
    unit_range("--v", args.visibility)?;
    let kind = parse_kind(&args.strategy)?;
    let strategy = build_strategy::<f64>(kind, args.n_copies, 1.0, args.visibility)?;
    let options = BuildOptions { commute_b1: !args.no_commute, constrain_long_path: !args.no_long_path };
    let problem = build_problem(&strategy, args.eta, &args.level, options).map_err(|e| match e {
        routed_bell::Error::LevelParse { .. } => Failure::Usage(e.to_string()),
        other => other.into(),
    })?;
    std::fs::create_dir_all(&args.out).map_err(|e| computation(e.to_string()))?;
    let stem = format!("{}_eta{:.6}", file_stem(kind, args.n_copies, args.visibility, &args.level), args.eta);
    export_problem(&problem, &args.out, &format!("{stem}.dat-s"), &format!("{stem}.json"))?;
    let sidecar = ProblemSidecar::new(&problem, &format!("{stem}.dat-s"));
    let text = output::json(&Metadata::new("export-npa", &args), &sidecar).map_err(computation)?;
    output::emit(&text, None, "").map_err(computation)?;
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match cli.command {
        Command::Score(a) => cmd_score(a),
        Command::JmScan(a) => cmd_jm_scan(a),
        Command::EtaScan(a) => cmd_eta_scan(a),
        Command::Robust(a) => cmd_robust(a),
        Command::ExportNpa(a) => cmd_export_npa(a),
    };
    match outcome {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Computation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
