//! Command-line front end. Results go to stdout, diagnostics to stderr.
//! Exit codes: 0 optimal or certified infeasible, 1 any other solver
//! status (limits, numerical trouble), 2 bad input or usage.

use crate::metrics::Metrics;
use crate::problem_file::{load_problem, Meta, ProblemFile};
use crate::record::{read_csv, write_csv, TimeSource};
use crate::suite::{Config, Suite};
use clap::{Args, Parser, Subcommand};
use conic_core::generators::{Family, GenSpec};
use conic_core::{PrecisionMode, SolveResult, Solver, SolverSettings};
use serde::Serialize;
use std::path::PathBuf;

pub const EXIT_OK: i32 = 0;
pub const EXIT_UNSOLVED: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "conic-bench", version, about = "Conic interior-point solver: solve, generate and benchmark")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve a JSON problem file and print the result as JSON.
    Solve(SolveArgs),
    /// Run a generator suite under one or more configurations.
    Bench(BenchArgs),
    /// Write one generated instance as a problem file.
    Gen(GenArgs),
    /// Recompute metrics from a benchmark CSV.
    Metrics(MetricsArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Precision {
    Full,
    Mixed,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    pub path: PathBuf,
    #[arg(long, default_value_t = 1e-6)]
    pub eps_feas: f64,
    #[arg(long, default_value_t = 1e-8)]
    pub eps_inf: f64,
    #[arg(long, default_value_t = 200)]
    pub max_iter: usize,
    /// Seconds; unlimited when omitted.
    #[arg(long)]
    pub time_limit: Option<f64>,
    #[arg(long, value_enum, default_value_t = Precision::Full)]
    pub precision: Precision,
    #[arg(long)]
    pub no_equilibrate: bool,
    #[arg(long, short)]
    pub verbose: bool,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// portfolio, huber, entropy or multistage; repeat or separate by commas.
    #[arg(long = "family", required = true, value_delimiter = ',')]
    pub families: Vec<Family>,
    #[arg(long, required = true, value_delimiter = ',')]
    pub sizes: Vec<usize>,
    /// Comma list or half-open range such as 0..10.
    #[arg(long, default_value = "0")]
    pub seeds: String,
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    #[arg(long, default_value_t = 1)]
    pub t: usize,
    /// label[:key=value,...]; repeatable. Defaults to a single "full" run.
    #[arg(long = "config")]
    pub configs: Vec<String>,
    /// Seconds (wall) or iterations; failed runs are charged this much.
    #[arg(long)]
    pub time_limit: Option<f64>,
    #[arg(long, default_value = "wall")]
    pub time_source: TimeSource,
    /// Parallel solves. Timings are not comparable when above 1.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Write metrics JSON here; with --csv and no --metrics it goes to stdout.
    #[arg(long)]
    pub metrics: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long)]
    pub family: Family,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    #[arg(long, default_value_t = 1)]
    pub t: usize,
    /// Risk aversion for portfolio instances.
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    pub csv: PathBuf,
}

/// Parses `0..10` or `1,4,9`.
pub fn parse_seeds(s: &str) -> Result<Vec<u64>, String> {
    if let Some((a, b)) = s.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|e| format!("seeds: {e}"))?;
        let b: u64 = b.trim().parse().map_err(|e| format!("seeds: {e}"))?;
        if a >= b {
            return Err(format!("seeds: empty range {s}"));
        }
        return Ok((a..b).collect());
    }
    s.split(',').map(|x| x.trim().parse().map_err(|e| format!("seeds: '{x}': {e}"))).collect()
}

#[derive(Debug, Serialize)]
struct SolveOutput<'a> {
    status: &'a str,
    x: &'a [f64],
    z: &'a [f64],
    s: &'a [f64],
    #[serde(skip_serializing_if = "Option::is_none")]
    certificate: Option<&'a [f64]>,
    /// Non-finite values (infeasible objectives, undefined residuals)
    /// are written as null.
    primal_objective: f64,
    dual_objective: f64,
    iterations: usize,
    setup_time: f64,
    solve_time: f64,
    primal_residual: f64,
    dual_residual: f64,
}

impl<'a> From<&'a SolveResult> for SolveOutput<'a> {
    fn from(r: &'a SolveResult) -> Self {
        Self {
            status: r.status.as_str(),
            x: &r.x,
            z: &r.z,
            s: &r.s,
            certificate: r.certificate.as_deref(),
            primal_objective: r.primal_objective,
            dual_objective: r.dual_objective,
            iterations: r.iterations,
            setup_time: r.setup_time,
            solve_time: r.solve_time,
            primal_residual: r.primal_residual,
            dual_residual: r.dual_residual,
        }
    }
}

fn input_error(msg: impl std::fmt::Display) -> i32 {
    eprintln!("error: {msg}");
    EXIT_INPUT
}

fn cmd_solve(a: &SolveArgs) -> i32 {
    let (problem, _) = match load_problem(&a.path) {
        Ok(p) => p,
        Err(e) => return input_error(format_args!("{}: {e}", a.path.display())),
    };
    let st = SolverSettings {
        eps_feas: a.eps_feas,
        eps_inf: a.eps_inf,
        max_iter: a.max_iter,
        time_limit: a.time_limit.unwrap_or(f64::INFINITY),
        precision: match a.precision {
            Precision::Full => PrecisionMode::Full,
            Precision::Mixed => PrecisionMode::Mixed,
        },
        equilibrate: !a.no_equilibrate,
        verbose: a.verbose,
        ..Default::default()
    };
    let mut solver = match Solver::new(problem, st) {
        Ok(s) => s,
        Err(e) => return input_error(e),
    };
    let r = solver.solve();
    println!("{}", serde_json::to_string(&SolveOutput::from(&r)).expect("result serializes"));
    if r.status.is_decisive() {
        EXIT_OK
    } else {
        EXIT_UNSOLVED
    }
}

fn cmd_gen(a: &GenArgs) -> i32 {
    let spec = GenSpec { k: a.k, t: a.t, gamma: a.gamma, ..GenSpec::new(a.family, a.n, a.seed) };
    let p = match spec.generate() {
        Ok(p) => p,
        Err(e) => return input_error(e),
    };
    let meta = Meta { name: crate::suite::problem_name(&spec), seed: Some(a.seed) };
    let file = ProblemFile::from_problem(&p, meta);
    match &a.output {
        Some(path) => match file.write(path) {
            Ok(()) => EXIT_OK,
            Err(e) => input_error(e),
        },
        None => {
            println!("{}", file.to_json());
            EXIT_OK
        }
    }
}

fn write_text(path: &std::path::Path, text: &str) -> Result<(), String> {
    std::fs::write(path, text).map_err(|e| format!("{}: {e}", path.display()))
}

fn cmd_bench(a: &BenchArgs) -> i32 {
    let seeds = match parse_seeds(&a.seeds) {
        Ok(s) => s,
        Err(e) => return input_error(e),
    };
    let labels = if a.configs.is_empty() { vec!["full".to_string()] } else { a.configs.clone() };
    let configs = match labels.iter().map(|c| c.parse::<Config>()).collect::<Result<Vec<_>, _>>() {
        Ok(c) => c,
        Err(e) => return input_error(e),
    };
    let time_limit = a.time_limit.unwrap_or(match a.time_source {
        TimeSource::Wall => 60.0,
        TimeSource::Iterations => SolverSettings::default().max_iter as f64,
    });
    if !(time_limit > 0.0) {
        return input_error("time limit must be positive");
    }
    if a.jobs > 1 && a.time_source == TimeSource::Wall {
        eprintln!("note: {} parallel jobs; wall-clock timings are not comparable", a.jobs);
    }
    let suite = Suite {
        families: a.families.clone(),
        sizes: a.sizes.clone(),
        seeds,
        k: a.k,
        t: a.t,
        configs,
        time_limit,
        time_source: a.time_source,
        jobs: a.jobs,
    };
    let instances = match suite.instances() {
        Ok(i) => i,
        Err(e) => return input_error(e),
    };
    let records = suite.run(&instances);

    let mut csv = Vec::new();
    write_csv(&mut csv, &records).expect("in-memory CSV");
    let csv = String::from_utf8(csv).expect("CSV is UTF-8");
    let metrics = Metrics::from_records(&records).map(|m| m.to_json()).unwrap_or_default();
    let res = match (&a.csv, &a.metrics) {
        (Some(c), Some(m)) => write_text(c, &csv).and_then(|_| write_text(m, &metrics)),
        (Some(c), None) => write_text(c, &csv).map(|_| println!("{metrics}")),
        (None, Some(m)) => write_text(m, &metrics).map(|_| print!("{csv}")),
        (None, None) => {
            print!("{csv}");
            Ok(())
        }
    };
    match res {
        Ok(()) => EXIT_OK,
        Err(e) => input_error(e),
    }
}

fn cmd_metrics(a: &MetricsArgs) -> i32 {
    let file = match std::fs::File::open(&a.csv) {
        Ok(f) => f,
        Err(e) => return input_error(format_args!("{}: {e}", a.csv.display())),
    };
    match read_csv(file) {
        Ok(records) => match Metrics::from_records(&records) {
            Some(m) => {
                println!("{}", m.to_json());
                EXIT_OK
            }
            None => input_error(format_args!("{}: no records", a.csv.display())),
        },
        Err(e) => input_error(format_args!("{}: {e}", a.csv.display())),
    }
}

pub fn run(cli: &Cli) -> i32 {
    match &cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Gen(a) => cmd_gen(a),
        Command::Metrics(a) => cmd_metrics(a),
    }
}
