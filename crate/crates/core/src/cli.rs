//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 runtime failure. Every flag is
//! validated before any instance is generated or any file is written.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::bench::{
    compare_tol, emit_report, generate_instance, lambda_sweep_tol, run_sweep, starting_point, write_trace,
    InstanceFile, InstanceSpec, LipschitzRule, ProblemSize, ReportFormat, SolverSettings, SweepOptions,
};
use crate::error::{DcaError, Result};
use crate::operators::{LeastSquares, RegularizerKind, RegularizerSpec};
use crate::solvers::{RunSummary, SolverConfig, SolverKind, DEFAULT_TITER_CAP};

/// Overrides the directory used when `--out` is not given.
pub const OUTPUT_DIR_ENV: &str = "CDCA_OUTPUT_DIR";

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "cdca", version, about = "Difference-of-convex solvers and sparse least-squares benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one solver on one generated instance.
    Solve(SolveArgs),
    /// Sweep lambda / L_f for one solver.
    SweepLambda(SweepLambdaArgs),
    /// Compare several solvers on paired instances.
    SweepCompare(SweepCompareArgs),
    /// Write a generated instance as JSON.
    GenInstance(GenArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Family {
    L12,
    Log,
}

impl From<Family> for RegularizerKind {
    fn from(f: Family) -> Self {
        match f {
            Family::L12 => RegularizerKind::L1MinusL2,
            Family::Log => RegularizerKind::Logarithmic,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum LipschitzArg {
    Tight,
    Unnormalized,
}

impl From<LipschitzArg> for LipschitzRule {
    fn from(l: LipschitzArg) -> Self {
        match l {
            LipschitzArg::Tight => LipschitzRule::Tight,
            LipschitzArg::Unnormalized => LipschitzRule::Unnormalized,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Debug, Args)]
struct ModelArgs {
    #[arg(long, value_enum, default_value = "l12")]
    family: Family,
    #[arg(long, default_value_t = RegularizerSpec::DEFAULT_GAMMA)]
    gamma: f64,
    /// Logarithmic penalty only.
    #[arg(long, default_value_t = RegularizerSpec::DEFAULT_EPSILON)]
    epsilon: f64,
    #[arg(long, default_value_t = crate::bench::instance::DEFAULT_NOISE_SCALE)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl ModelArgs {
    fn regularizer(&self) -> Result<RegularizerSpec> {
        match self.family {
            Family::L12 => RegularizerSpec::l1_minus_l2(self.gamma),
            Family::Log => RegularizerSpec::logarithmic(self.gamma, self.epsilon),
        }
    }

    fn spec(&self, size: ProblemSize) -> Result<InstanceSpec> {
        let mut spec = InstanceSpec::new(size, self.seed, self.regularizer()?);
        if !(self.noise >= 0.0) || !self.noise.is_finite() {
            return Err(DcaError::InvalidArgument(format!("--noise must be nonnegative, got {}", self.noise)));
        }
        spec.noise_scale = self.noise;
        Ok(spec)
    }
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long, default_value_t = DEFAULT_TITER_CAP)]
    titer_cap: usize,
    /// Check descent and residual invariants on every iteration.
    #[arg(long)]
    check_invariants: bool,
    /// `L_f` handed to the solvers: tight `lambda_max(A^T A)`, or the bound
    /// from the matrix before column normalization.
    #[arg(long, value_enum, default_value = "unnormalized")]
    lipschitz: LipschitzArg,
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    run: RunArgs,
    #[arg(long, default_value = "120x512x20", value_parser = parse_size)]
    size: ProblemSize,
    #[arg(long, default_value = "cdca", value_parser = parse_solver)]
    solver: SolverKind,
    /// lambda as a multiple of L_f.
    #[arg(long, default_value_t = 0.1)]
    lambda: f64,
    /// Defaults to the comparison preset for the family and size.
    #[arg(long)]
    tol: Option<f64>,
    /// Per-iteration trace file.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// JSON run summary; printed to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    run: RunArgs,
    #[arg(long = "sizes", alias = "size", value_delimiter = ',', default_value = "120x512x20", value_parser = parse_size)]
    sizes: Vec<ProblemSize>,
    /// Overrides the per-size presets.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, default_value_t = 30)]
    trials: usize,
    /// Worker threads; 0 uses every processor.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Inferred from the `--out` extension when omitted.
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
}

#[derive(Debug, Args)]
struct SweepLambdaArgs {
    #[command(flatten)]
    sweep: SweepArgs,
    #[arg(long, default_value = "cdca", value_parser = parse_solver)]
    solver: SolverKind,
    /// Comma-separated multiples of L_f; family defaults when omitted.
    #[arg(long, value_delimiter = ',')]
    lambdas: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
struct SweepCompareArgs {
    #[command(flatten)]
    sweep: SweepArgs,
    #[arg(long, value_delimiter = ',', default_value = "cdca,adca,pdca_e", value_parser = parse_solver)]
    solvers: Vec<SolverKind>,
    /// lambda / L_f for cDCA and LPM.
    #[arg(long, default_value_t = 0.1)]
    lambda: f64,
}

#[derive(Debug, Args)]
struct GenArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, value_parser = parse_size)]
    size: ProblemSize,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_size(s: &str) -> std::result::Result<ProblemSize, String> {
    s.parse().map_err(|e: DcaError| e.to_string())
}

fn parse_solver(s: &str) -> std::result::Result<SolverKind, String> {
    s.parse().map_err(|e: DcaError| e.to_string())
}

enum Failure {
    Usage(String),
    Runtime(DcaError),
}

impl From<DcaError> for Failure {
    fn from(e: DcaError) -> Self {
        Failure::Runtime(e)
    }
}

fn usage<T>(msg: impl Into<String>) -> std::result::Result<T, Failure> {
    Err(Failure::Usage(msg.into()))
}

fn positive(name: &str, v: f64) -> std::result::Result<f64, Failure> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        usage(format!("--{name} must be positive, got {v}"))
    }
}

fn output_path(explicit: Option<PathBuf>, default_name: &str) -> PathBuf {
    explicit.unwrap_or_else(|| {
        let dir = std::env::var_os(OUTPUT_DIR_ENV)
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from("."));
        dir.join(default_name)
    })
}

fn report_format(arg: Option<FormatArg>, path: &Path) -> ReportFormat {
    match arg {
        Some(FormatArg::Csv) => ReportFormat::Csv,
        Some(FormatArg::Json) => ReportFormat::Json,
        None => ReportFormat::from_path(path),
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match cli.command {
        Command::Solve(a) => solve(a),
        Command::SweepLambda(a) => sweep_lambda(a),
        Command::SweepCompare(a) => sweep_compare(a),
        Command::GenInstance(a) => gen_instance(a),
    };
    match outcome {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            EXIT_RUNTIME
        }
    }
}

#[derive(Serialize)]
struct SolveRecord<'a> {
    spec: &'a InstanceSpec,
    lipschitz: f64,
    config: &'a SolverConfig,
    summary: &'a RunSummary,
    point: Vec<f64>,
}

fn solve(a: SolveArgs) -> std::result::Result<(), Failure> {
    let spec = a.model.spec(a.size).or_else(|e| usage(e.to_string()))?;
    positive("lambda", a.lambda)?;
    let tol = match a.tol {
        Some(t) => positive("tol", t)?,
        None => compare_tol(a.solver, spec.regularizer.kind, &a.size),
    };
    if a.run.titer_cap == 0 {
        return usage("--titer-cap must be positive");
    }

    let instance = generate_instance(&spec)?;
    let lf = LipschitzRule::from(a.run.lipschitz).lipschitz(&instance)?;
    let problem = LeastSquares::with_lipschitz(instance.data, lf)?.into_problem(&spec.regularizer)?;
    let mut config = SolverConfig::with_lambda_multiple(lf, a.lambda, tol);
    config.titer_cap = a.run.titer_cap;
    config.check_invariants = a.run.check_invariants;
    config.record_objective = a.trace.is_some();
    let x0 = starting_point(spec.seed, a.size.cols);
    let out = a.solver.solve(&problem, x0.view(), &config)?;

    if let Some(path) = &a.trace {
        write_trace(&out.trace, path)?;
    }
    for v in &out.trace.violations {
        eprintln!("invariant violated at k = {}: {:?} ({} > {})", v.k, v.kind, v.lhs, v.rhs);
    }
    let record = SolveRecord {
        spec: &spec,
        lipschitz: lf,
        config: &config,
        summary: &out.summary,
        point: out.point.to_vec(),
    };
    let ser = |e: serde_json::Error| DcaError::Serialization(e.to_string());
    match a.out {
        Some(path) => {
            let mut bytes = serde_json::to_vec_pretty(&record).map_err(ser)?;
            bytes.push(b'\n');
            crate::bench::report::write_atomic(&path, &bytes)?;
        }
        None => {
            let line = serde_json::to_string(&out.summary).map_err(ser)?;
            let mut stdout = std::io::stdout().lock();
            let _ = writeln!(stdout, "{line}");
        }
    }
    Ok(())
}

struct PreparedSweep {
    templates: Vec<InstanceSpec>,
    options: SweepOptions,
    out: PathBuf,
    format: ReportFormat,
}

fn prepare(s: SweepArgs, default_name: &str) -> std::result::Result<PreparedSweep, Failure> {
    if s.trials == 0 {
        return usage("--trials must be at least 1");
    }
    if s.run.titer_cap == 0 {
        return usage("--titer-cap must be positive");
    }
    if s.sizes.is_empty() {
        return usage("--sizes needs at least one size");
    }
    if let Some(t) = s.tol {
        positive("tol", t)?;
    }
    let templates = s
        .sizes
        .iter()
        .map(|sz| s.model.spec(*sz))
        .collect::<Result<Vec<_>>>()
        .or_else(|e| usage(e.to_string()))?;
    let out = output_path(s.out, default_name);
    let format = report_format(s.format, &out);
    Ok(PreparedSweep {
        templates,
        options: SweepOptions {
            trials: s.trials,
            titer_cap: s.run.titer_cap,
            base_seed: s.model.seed,
            check_invariants: s.run.check_invariants,
            jobs: s.jobs,
            lipschitz: s.run.lipschitz.into(),
        },
        out,
        format,
    })
}

fn tolerances(
    settings: &mut SolverSettings,
    sizes: &[ProblemSize],
    explicit: Option<f64>,
    preset: impl Fn(&ProblemSize) -> f64,
) {
    if let Some(t) = explicit {
        settings.tol = t;
        return;
    }
    for sz in sizes {
        settings.tol_by_size.insert(*sz, preset(sz));
    }
    if let Some(first) = sizes.first() {
        settings.tol = preset(first);
    }
}

fn finish_sweep(p: PreparedSweep, solvers: &[SolverSettings]) -> std::result::Result<(), Failure> {
    let report = run_sweep(&p.templates, solvers, &p.options)?;
    emit_report(&report, p.format, &p.out)?;
    let failures: usize = report.cells.iter().map(|c| c.failures).sum();
    if failures > 0 {
        eprintln!("{failures} trial(s) failed; see the report for details");
    }
    Ok(())
}

fn sweep_lambda(a: SweepLambdaArgs) -> std::result::Result<(), Failure> {
    let family: RegularizerKind = a.sweep.model.family.into();
    let lambdas = a.lambdas.clone().unwrap_or_else(|| match family {
        RegularizerKind::L1MinusL2 => vec![0.001, 0.01, 0.1, 0.5],
        RegularizerKind::Logarithmic => vec![0.07, 0.1, 0.2],
    });
    if lambdas.is_empty() {
        return usage("--lambdas needs at least one value");
    }
    for l in &lambdas {
        positive("lambdas", *l)?;
    }
    let sizes = a.sweep.sizes.clone();
    let tol = a.sweep.tol;
    let p = prepare(a.sweep, "sweep-lambda.csv")?;
    let solvers: Vec<SolverSettings> = lambdas
        .iter()
        .map(|&l| {
            let mut s = SolverSettings::new(a.solver, l, 0.0);
            tolerances(&mut s, &sizes, tol, |sz| lambda_sweep_tol(family, sz));
            s
        })
        .collect();
    finish_sweep(p, &solvers)
}

fn sweep_compare(a: SweepCompareArgs) -> std::result::Result<(), Failure> {
    let family: RegularizerKind = a.sweep.model.family.into();
    positive("lambda", a.lambda)?;
    if a.solvers.is_empty() {
        return usage("--solvers needs at least one solver");
    }
    let sizes = a.sweep.sizes.clone();
    let tol = a.sweep.tol;
    let p = prepare(a.sweep, "sweep-compare.csv")?;
    let solvers: Vec<SolverSettings> = a
        .solvers
        .iter()
        .map(|&kind| {
            let mut s = SolverSettings::new(kind, a.lambda, 0.0);
            tolerances(&mut s, &sizes, tol, |sz| compare_tol(kind, family, sz));
            s
        })
        .collect();
    finish_sweep(p, &solvers)
}

fn gen_instance(a: GenArgs) -> std::result::Result<(), Failure> {
    let spec = a.model.spec(a.size).or_else(|e| usage(e.to_string()))?;
    let out = output_path(a.out, "instance.json");
    let instance = generate_instance(&spec)?;
    let file = InstanceFile::from(&instance);
    let mut bytes = serde_json::to_vec_pretty(&file).map_err(|e| DcaError::Serialization(e.to_string()))?;
    bytes.push(b'\n');
    crate::bench::report::write_atomic(&out, &bytes)?;
    Ok(())
}
