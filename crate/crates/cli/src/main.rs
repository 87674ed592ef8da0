use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use itags_core::generator::{generate_problem, ArchetypeTable, GeneratorParams};
use itags_core::harness::{load_problem_dir, parse_configs, run_ablation, run_benchmark, BenchmarkReport};
use itags_core::{
    itags, itags_sequential, load_problem, problem_to_json, save_solution, PlannerChoice, PlannerConfig,
    SchedulerConfig, SearchConfig, TabuParams,
};

/// Task allocation, scheduling and motion planning for heterogeneous robot teams.
#[derive(Parser)]
#[command(name = "itags", version)]
struct Cli {
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one problem file.
    Solve(SolveArgs),
    /// Generate a random emergency-response problem.
    Generate(GenerateArgs),
    /// Run a set of solver configurations over a directory of problems.
    Bench(BenchArgs),
    /// Sweep alpha over a directory of problems.
    Ablate(AblateArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum PlannerArg {
    Grid,
    Prm,
}

#[derive(Args)]
struct SearchArgs {
    /// Weight on APR in the search heuristic; 1 - alpha weights NSQ.
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    #[arg(long, value_enum, default_value_t = PlannerArg::Grid)]
    planner: PlannerArg,
    /// Seeds tabu tie-breaking and the sampling planner.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Maximum number of nodes visited.
    #[arg(long, default_value_t = 100_000)]
    node_limit: u64,
    /// Wall-clock limit in seconds.
    #[arg(long, default_value_t = 300.0)]
    time_limit: f64,
    /// Per-query motion planner timeout in seconds.
    #[arg(long, default_value_t = 5.0)]
    planner_timeout: f64,
    /// Grid cell size; defaults to 1/100 of the workspace diagonal.
    #[arg(long)]
    grid_resolution: Option<f64>,
    #[arg(long, default_value_t = 500)]
    prm_samples: usize,
    /// Roadmap connection radius as a fraction of the workspace diagonal.
    #[arg(long, default_value_t = 0.2)]
    prm_radius: f64,
    /// Disable motion plan memoization.
    #[arg(long)]
    no_cache: bool,
    #[arg(long, default_value_t = 4)]
    tabu_tenure: usize,
    #[arg(long, default_value_t = 100)]
    tabu_iterations: usize,
    /// Stop the ordering search after this many non-improving moves.
    #[arg(long, default_value_t = 25)]
    tabu_patience: usize,
}

impl SearchArgs {
    fn config(&self) -> Result<SearchConfig> {
        let config = SearchConfig {
            alpha: self.alpha,
            node_limit: self.node_limit,
            time_limit_seconds: self.time_limit,
            planner: PlannerConfig {
                kind: match self.planner {
                    PlannerArg::Grid => PlannerChoice::Grid,
                    PlannerArg::Prm => PlannerChoice::Prm,
                },
                grid_resolution: self.grid_resolution,
                prm_samples: self.prm_samples,
                prm_radius_fraction: self.prm_radius,
                timeout_seconds: self.planner_timeout,
                seed: self.seed,
                caching: !self.no_cache,
            },
            scheduler: SchedulerConfig {
                tabu: TabuParams {
                    tenure: self.tabu_tenure,
                    max_iterations: self.tabu_iterations,
                    max_non_improving: self.tabu_patience,
                    seed: self.seed,
                },
                ..SchedulerConfig::default()
            },
            seed: self.seed,
        };
        config.validate()?;
        Ok(config)
    }
}

#[derive(Args)]
struct SolveArgs {
    problem: PathBuf,
    #[command(flatten)]
    search: SearchArgs,
    /// Allocate first, then schedule (sequential baseline).
    #[arg(long)]
    sequential: bool,
    /// Write compute_seconds as 0 so repeated runs are byte-identical.
    #[arg(long)]
    reproducible: bool,
    /// Solution file; stdout when omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct GenerateArgs {
    /// Robot count range, `A:B` or a single number.
    #[arg(long, default_value = "4:6")]
    robots: String,
    /// Task count range, `A:B` or a single number.
    #[arg(long, default_value = "6:12")]
    tasks: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Fenced zones reachable only by aerial robots.
    #[arg(long, default_value_t = 1)]
    zones: usize,
    /// Map width and height.
    #[arg(long, default_value_t = 100.0)]
    size: f64,
    /// Robot archetype table (JSON); the bundled table when omitted.
    #[arg(long)]
    archetypes: Option<PathBuf>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    dir: PathBuf,
    /// JSON list of named solver configurations.
    #[arg(long)]
    configs: PathBuf,
    /// Configuration used for the normalized columns; the first by default.
    #[arg(long)]
    baseline: Option<String>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct AblateArgs {
    dir: PathBuf,
    /// Comma-separated weights on APR.
    #[arg(long, value_delimiter = ',', default_value = "0,0.25,0.5,0.75,1")]
    alphas: Vec<f64>,
    #[arg(long, default_value_t = 100_000)]
    node_limit: u64,
    #[arg(long, default_value_t = 300.0)]
    time_limit: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

fn parse_range(text: &str) -> Result<(usize, usize)> {
    let (a, b) = text.split_once(':').unwrap_or((text, text));
    let a: usize = a.trim().parse().with_context(|| format!("bad range `{text}`"))?;
    let b: usize = b.trim().parse().with_context(|| format!("bad range `{text}`"))?;
    Ok((a, b))
}

fn emit(output: Option<&Path>, text: &str) -> Result<()> {
    match output {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn solve(args: &SolveArgs) -> Result<ExitCode> {
    let text =
        fs::read_to_string(&args.problem).with_context(|| format!("reading {}", args.problem.display()))?;
    let domain = load_problem(&text).with_context(|| format!("loading {}", args.problem.display()))?;
    let config = args.search.config()?;
    let outcome = if args.sequential {
        itags_sequential(&domain, &config)?
    } else {
        itags(&domain, &config)?
    };
    let mut metrics = outcome.metrics.clone();
    if args.reproducible {
        metrics.compute_seconds = 0.0;
    }
    match &outcome.result {
        Ok(solution) => {
            log::info!(
                "solved: makespan {} after {} nodes visited, {} expanded",
                solution.makespan(),
                metrics.nodes_visited,
                metrics.nodes_expanded
            );
            emit(args.output.as_deref(), &save_solution(solution, &metrics))?;
            Ok(ExitCode::SUCCESS)
        }
        Err(reason) => {
            eprintln!(
                "unsolved: {reason} ({} nodes visited, {} expanded)",
                metrics.nodes_visited, metrics.nodes_expanded
            );
            Ok(ExitCode::from(2))
        }
    }
}

fn generate(args: &GenerateArgs) -> Result<ExitCode> {
    let (robots_min, robots_max) = parse_range(&args.robots)?;
    let (tasks_min, tasks_max) = parse_range(&args.tasks)?;
    let archetypes = match &args.archetypes {
        Some(path) => ArchetypeTable::from_json(&fs::read_to_string(path)?)
            .with_context(|| format!("loading {}", path.display()))?,
        None => ArchetypeTable::builtin(),
    };
    let params = GeneratorParams {
        robots_min,
        robots_max,
        tasks_min,
        tasks_max,
        width: args.size,
        height: args.size,
        enclosed_zones: args.zones,
        seed: args.seed,
        archetypes,
        ..GeneratorParams::default()
    };
    let domain = generate_problem(&params)?;
    emit(args.output.as_deref(), &problem_to_json(&domain))?;
    Ok(ExitCode::SUCCESS)
}

fn report(report: &BenchmarkReport, output: Option<&Path>) -> Result<ExitCode> {
    for s in report.summary() {
        let fmt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |v| format!("{v:.3}"));
        eprintln!(
            "{}: solved {}/{} | makespan mean {} median {} | visited mean {} median {} | seconds mean {}",
            s.config,
            s.solved,
            s.runs,
            fmt(s.makespan.mean),
            fmt(s.makespan.median),
            fmt(s.nodes_visited.mean),
            fmt(s.nodes_visited.median),
            fmt(s.compute_seconds.mean),
        );
    }
    emit(output, &report.to_csv()?)?;
    Ok(ExitCode::SUCCESS)
}

fn problems(dir: &Path) -> Result<Vec<(String, itags_core::ProblemDomain)>> {
    let problems =
        load_problem_dir(dir).with_context(|| format!("loading problems from {}", dir.display()))?;
    if problems.is_empty() {
        bail!("no problem files in {}", dir.display());
    }
    Ok(problems)
}

fn bench(args: &BenchArgs) -> Result<ExitCode> {
    let configs = parse_configs(&fs::read_to_string(&args.configs)?)
        .with_context(|| format!("loading {}", args.configs.display()))?;
    let r = run_benchmark(&problems(&args.dir)?, &configs, args.baseline.as_deref())?;
    report(&r, args.output.as_deref())
}

fn ablate(args: &AblateArgs) -> Result<ExitCode> {
    let base = SearchConfig {
        node_limit: args.node_limit,
        time_limit_seconds: args.time_limit,
        seed: args.seed,
        ..SearchConfig::default()
    };
    let r = run_ablation(&problems(&args.dir)?, &args.alphas, &base)?;
    report(&r, args.output.as_deref())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let result = match &cli.command {
        Command::Solve(a) => solve(a),
        Command::Generate(a) => generate(a),
        Command::Bench(a) => bench(a),
        Command::Ablate(a) => ablate(a),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e:#}");
        ExitCode::FAILURE
    })
}
