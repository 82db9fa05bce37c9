use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use scenred::config::ExperimentConfig;
use scenred::evaluation::{run_experiment_with, status_name, Method, Problem};
use scenred::milp::{write_lp, MilpStatus};
use scenred::ocp::{build_milp, solve_instance, Solution, Variant};
use scenred::reduction::{reduce, Norm, ReducedSet};
use scenred::scenario::{generate_synthetic, load_scenarios, save_scenarios, DistributionSpec, Format, ScenarioSet};
use scenred::Error;

const EXIT_INVALID: u8 = 1;
const EXIT_INFEASIBLE: u8 = 2;
const EXIT_LIMIT: u8 = 3;

/// Scenario reduction for chance-constrained optimal control.
#[derive(Parser)]
#[command(name = "scenred", version)]
struct Cli {
    /// Experiment configuration (TOML, or JSON by extension).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file; standard output when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a synthetic scenario set.
    Generate(GenerateArgs),
    /// Cluster a scenario set down to fewer representatives.
    Reduce(ReduceArgs),
    /// Solve one problem variant and write the solution as JSON.
    Solve(SolveArgs),
    /// Score a saved solution against the full scenario set.
    Evaluate(EvaluateArgs),
    /// Run the configured sweep and write the results CSV.
    Experiment,
}

#[derive(Args)]
struct GenerateArgs {
    /// Number of scenarios.
    #[arg(long = "M")]
    count: Option<usize>,
    /// State dimension.
    #[arg(long = "n")]
    state_dim: Option<usize>,
    /// Horizon.
    #[arg(long = "N")]
    horizon: Option<usize>,
    /// Per-coordinate standard deviation of the Gaussian steps.
    #[arg(long)]
    std: Option<f64>,
    /// csv or json; defaults to the output extension, else csv.
    #[arg(long)]
    format: Option<Format>,
}

#[derive(Args)]
struct ReduceArgs {
    /// Scenario file; defaults to the configured scenario source.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Target number of representatives.
    #[arg(long = "M-tilde", alias = "m-tilde")]
    m_tilde: usize,
    /// Norm exponent: 1 (k-medians) or 2 (k-means).
    #[arg(long, default_value_t = 1)]
    l: u32,
    /// State dimension for CSV input; horizon is inferred from the width.
    #[arg(long = "n")]
    state_dim: Option<usize>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Args)]
struct SolveArgs {
    /// exact, p1 or p2.
    #[arg(long)]
    variant: Variant,
    /// Reduced size for p1/p2.
    #[arg(long = "M-tilde", alias = "m-tilde")]
    m_tilde: Option<usize>,
    /// kMED or kMNS.
    #[arg(long, default_value = "kMED")]
    method: Method,
    /// Use this reduced set instead of reducing here.
    #[arg(long)]
    reduced: Option<PathBuf>,
    /// Also write the MILP in LP format.
    #[arg(long)]
    lp: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Solution JSON written by `solve`.
    #[arg(long)]
    solution: PathBuf,
}

#[derive(Debug)]
enum CliError {
    Invalid(String),
    Lib(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Lib(Error::Io(e))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Lib(Error::Json(e))
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Invalid(m) => f.write_str(m),
            CliError::Lib(e) => write!(f, "{e}"),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn bail<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Invalid(msg.into()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_INVALID) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_INVALID)
        }
    }
}

fn run(cli: Cli) -> CliResult<ExitCode> {
    let config = match &cli.config {
        Some(p) => {
            let mut cfg = ExperimentConfig::from_path(p)?;
            if let Some(s) = cli.seed {
                cfg.seed = s;
            }
            Some(cfg)
        }
        None => None,
    };
    match cli.command {
        Command::Generate(a) => generate(&a, config.as_ref(), cli.seed, cli.out.as_deref()),
        Command::Reduce(a) => reduce_cmd(&a, config.as_ref(), cli.seed, cli.out.as_deref()),
        Command::Solve(a) => solve(&a, need_config(config.as_ref())?, cli.out.as_deref()),
        Command::Evaluate(a) => evaluate(&a, need_config(config.as_ref())?, cli.out.as_deref()),
        Command::Experiment => experiment(need_config(config.as_ref())?, cli.out.as_deref()),
    }
}

fn need_config(cfg: Option<&ExperimentConfig>) -> CliResult<&ExperimentConfig> {
    cfg.ok_or_else(|| CliError::Invalid("this command needs --config <path>".into()))
}

fn sink(out: Option<&Path>) -> CliResult<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| CliError::Invalid(format!("{}: {e}", p.display())))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json<T: serde::Serialize>(value: &T, out: Option<&Path>) -> CliResult<()> {
    let mut w = sink(out)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn generate(a: &GenerateArgs, cfg: Option<&ExperimentConfig>, seed: Option<u64>, out: Option<&Path>) -> CliResult<ExitCode> {
    let seed = seed.or(cfg.map(|c| c.seed)).unwrap_or(0);
    let count = a.count.or(cfg.map(|c| c.scenarios.count));
    let state_dim = a.state_dim.or(cfg.map(|c| c.x0.len()));
    let horizon = a.horizon.or(cfg.map(|c| c.horizon));
    let (Some(count), Some(state_dim), Some(horizon)) = (count, state_dim, horizon) else {
        return bail("generate needs --M, --n and --N (or a --config providing them)");
    };
    if count == 0 || state_dim == 0 || horizon == 0 {
        return bail("--M, --n and --N must all be at least 1");
    }
    let spec = match (a.std, cfg) {
        (Some(std), _) => DistributionSpec::Gaussian { std: vec![std] },
        (None, Some(c)) => c.scenarios.distribution.clone(),
        (None, None) => DistributionSpec::default(),
    };
    let set = generate_synthetic(seed, count, state_dim, horizon, &spec)?;
    let format = a.format.unwrap_or_else(|| out.map_or(Format::Csv, Format::from_path));
    let mut w = sink(out)?;
    save_scenarios(&set, format, &mut w)?;
    w.flush()?;
    eprintln!("generated {count} scenarios (n = {state_dim}, N = {horizon}, seed = {seed})");
    Ok(ExitCode::SUCCESS)
}

fn read_scenarios(path: &Path, state_dim: Option<usize>) -> CliResult<ScenarioSet> {
    let file = File::open(path).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))?;
    let format = Format::from_path(path);
    let set = load_scenarios(file, format, None)?;
    match (format, state_dim) {
        (Format::Csv, Some(n)) => {
            let d = set.dim();
            if n == 0 || d % n != 0 {
                return bail(format!("{d} values per scenario is not a multiple of n = {n}"));
            }
            Ok(ScenarioSet::new(n, d / n, set.into_scenarios())?)
        }
        _ => Ok(set),
    }
}

fn reduce_cmd(a: &ReduceArgs, cfg: Option<&ExperimentConfig>, seed: Option<u64>, out: Option<&Path>) -> CliResult<ExitCode> {
    let norm = Norm::from_l(a.l)?;
    let original = match (&a.input, cfg) {
        (Some(p), _) => read_scenarios(p, a.state_dim.or(cfg.map(|c| c.x0.len())))?,
        (None, Some(c)) => c.problem()?.scenarios,
        (None, None) => return bail("reduce needs --input <file> or --config <path>"),
    };
    let mut opts = cfg.map(ExperimentConfig::reduce_options).unwrap_or_default();
    if let Some(s) = seed {
        opts.seed = s;
    }
    if let Some(m) = a.max_iter {
        opts.max_iter = m;
    }
    if let Some(t) = a.tol {
        opts.tol = t;
    }
    let reduced = reduce(&original, a.m_tilde, norm, &opts)?;
    write_json(&reduced, out)?;
    eprintln!(
        "reduced {} -> {} scenarios (l = {}), loss = {}, iterations = {}",
        original.len(),
        reduced.len(),
        norm.l(),
        reduced.loss,
        reduced.iterations
    );
    Ok(ExitCode::SUCCESS)
}

fn reduced_for(a: &SolveArgs, cfg: &ExperimentConfig, problem: &Problem) -> CliResult<ReducedSet> {
    if let Some(path) = &a.reduced {
        let file = File::open(path).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))?;
        let r: ReducedSet = serde_json::from_reader(io::BufReader::new(file))?;
        r.check_against(&problem.scenarios)?;
        return Ok(r);
    }
    let Some(m_tilde) = a.m_tilde else {
        return bail("variants p1 and p2 need --M-tilde or --reduced");
    };
    Ok(reduce(&problem.scenarios, m_tilde, a.method.norm(), &cfg.reduce_options())?)
}

fn exit_for(status: MilpStatus) -> ExitCode {
    match status {
        MilpStatus::Optimal => ExitCode::SUCCESS,
        MilpStatus::Infeasible | MilpStatus::Unbounded => ExitCode::from(EXIT_INFEASIBLE),
        MilpStatus::Limit => ExitCode::from(EXIT_LIMIT),
    }
}

fn solve(a: &SolveArgs, cfg: &ExperimentConfig, out: Option<&Path>) -> CliResult<ExitCode> {
    let problem = cfg.problem()?;
    let (inst, opts) = match a.variant {
        Variant::Exact => (problem.exact_instance(), cfg.solver.exact_options()),
        v => (problem.reduced_instance(&reduced_for(a, cfg, &problem)?, v)?, cfg.solver.milp_options()),
    };
    if let Some(lp) = &a.lp {
        let (model, _) = build_milp(&inst)?;
        std::fs::write(lp, write_lp(&model)).map_err(|e| CliError::Invalid(format!("{}: {e}", lp.display())))?;
    }
    let sol = solve_instance(&inst, &opts)?;
    write_json(&sol, out)?;
    eprintln!(
        "{} with {} scenarios: {} objective = {} correction = {} nodes = {} time = {:.3}s",
        sol.variant,
        inst.scenarios.len(),
        status_name(sol.status),
        sol.objective,
        sol.correction,
        sol.nodes,
        sol.solve_time_s
    );
    Ok(exit_for(sol.status))
}

fn evaluate(a: &EvaluateArgs, cfg: &ExperimentConfig, out: Option<&Path>) -> CliResult<ExitCode> {
    let problem = cfg.problem()?;
    let file = File::open(&a.solution).map_err(|e| CliError::Invalid(format!("{}: {e}", a.solution.display())))?;
    let sol: Solution = serde_json::from_reader(io::BufReader::new(file))?;
    if !sol.has_inputs() {
        return bail("the solution has no input sequence to evaluate");
    }
    let report = problem.evaluate(&sol.u_star)?;
    let summary = serde_json::json!({
        "variant": sol.variant,
        "status": sol.status,
        "objective": sol.objective,
        "satisfaction_prob": report.satisfaction_prob,
        "min_satisfaction_prob": cfg.min_satisfaction_prob,
        "expected_cost_oos": report.expected_cost,
        "satisfied": report.satisfied,
    });
    write_json(&summary, out)?;
    eprintln!(
        "satisfaction = {} (required {}), expected cost = {}",
        report.satisfaction_prob, cfg.min_satisfaction_prob, report.expected_cost
    );
    Ok(ExitCode::SUCCESS)
}

fn experiment(cfg: &ExperimentConfig, out: Option<&Path>) -> CliResult<ExitCode> {
    let target = out.map(Path::to_path_buf).or_else(|| cfg.output.as_ref().map(|p| cfg.resolve(p)));
    let result = run_experiment_with(cfg, &mut |r| {
        eprintln!(
            "{:<5} {:<4} M~={:<4} {:<10} objective={} satisfaction={}",
            r.variant.to_string(),
            r.method.map_or("-".to_string(), |m| m.to_string()),
            r.m_tilde,
            r.status,
            r.objective.map_or("-".into(), |v| format!("{v:.6}")),
            r.satisfaction_prob.map_or("-".into(), |v| format!("{v:.4}")),
        );
    })?;
    let w = sink(target.as_deref())?;
    result.write_csv(w)?;
    if let Some(p) = target {
        eprintln!("wrote {} rows to {}", result.rows.len(), p.display());
    }
    Ok(ExitCode::SUCCESS)
}
