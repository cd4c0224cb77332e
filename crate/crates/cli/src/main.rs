//! `psa`: single solves, seeded batch campaigns, audits of the published
//! comparison tables, and side-by-side comparisons.
//!
//! Exit codes: 0 success, 1 usage or input error, 2 evaluation failure,
//! 3 audit mismatch under `audit --strict`.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use psa_core::batch::run_batch;
use psa_core::benchmarks::{self, audit_table, reference_table};
use psa_core::engine::{solve, solve_traced, SolverConfig};
use psa_core::report::{render_audit, render_batch, render_comparison, render_run, render_trace, OutputFormat};
use psa_core::{load_problem, Error, Problem};

#[derive(Parser)]
#[command(name = "psa", version, about = "Porcellio scaber constrained optimizer")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve once and print x*, f* and every constraint value.
    Solve {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        solver: SolverArgs,
        /// Write the per-step trace (step, best_f, feasible_count) as CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Run a seeded batch and print campaign statistics.
    Bench {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long, default_value_t = 30)]
        runs: usize,
    },
    /// Recompute every published row of a built-in problem's comparison table.
    Audit {
        #[command(flatten)]
        common: Common,
        /// Band around zero for constraint sign decisions.
        #[arg(long, default_value_t = benchmarks::SIGN_TOLERANCE)]
        tolerance: f64,
        /// Exit with status 3 if any row disagrees with its recomputation.
        #[arg(long)]
        strict: bool,
    },
    /// Run a batch and print the published table with this run's best added.
    Compare {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long, default_value_t = 30)]
        runs: usize,
    },
}

#[derive(Args)]
struct Common {
    /// Built-in problem name or path to a .cop file.
    #[arg(long)]
    problem: String,
    #[arg(long, default_value = "text", value_parser = parse_format)]
    format: OutputFormat,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SolverArgs {
    /// Seed of the first run; batches use seed, seed+1, ...
    #[arg(long, env = "PSA_DEFAULT_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.6)]
    lambda: f64,
    /// Swarm size.
    #[arg(long, default_value_t = 40)]
    swarm: usize,
    #[arg(long, default_value_t = 5000)]
    max_steps: usize,
    /// Penalty weight.
    #[arg(long, default_value_t = 1e12)]
    gamma: f64,
    /// Standard deviation of the random direction.
    #[arg(long, default_value_t = 0.1)]
    tau_std: f64,
}

impl SolverArgs {
    fn config(&self) -> SolverConfig {
        SolverConfig {
            swarm_size: self.swarm,
            lambda: self.lambda,
            max_steps: self.max_steps,
            tau_std: self.tau_std,
            gamma: self.gamma,
            seed: self.seed,
        }
    }
}

fn parse_format(s: &str) -> Result<OutputFormat, String> {
    s.parse()
        .map_err(|_| format!("expected one of text, csv, json; got `{s}`"))
}

enum Failure {
    Core(Error),
    AuditMismatch(String),
    /// Every run of a campaign failed to evaluate.
    NoCompletedRun(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Core(e.into())
    }
}

fn emit(common: &Common, text: &str) -> Result<(), Failure> {
    match &common.out {
        Some(path) => fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

/// Reference table columns only apply to the built-in encodings.
fn builtin_table(common: &Common) -> Option<benchmarks::ReferenceTable> {
    benchmarks::by_name(&common.problem)
        .ok()
        .and_then(|_| reference_table(&common.problem).ok())
}

fn builtin(common: &Common) -> Result<(Problem, benchmarks::ReferenceTable), Failure> {
    let problem = benchmarks::by_name(&common.problem)?;
    let table = reference_table(&common.problem)?;
    Ok((problem, table))
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Solve { common, solver, trace } => {
            let problem = load_problem(&common.problem)?;
            let config = solver.config();
            let result = match &trace {
                Some(path) => {
                    let mut records = Vec::new();
                    let result = solve_traced(&problem, &config, |r| records.push(*r))?;
                    fs::write(path, render_trace(&records)?)?;
                    result
                }
                None => solve(&problem, &config)?,
            };
            let report = render_run(&problem, &result, builtin_table(&common).as_ref(), common.format)?;
            emit(&common, &report)
        }
        Command::Bench { common, solver, runs } => {
            let problem = load_problem(&common.problem)?;
            let summary = run_batch(&problem, runs, solver.seed, &solver.config())?;
            emit(&common, &render_batch(&summary, common.format)?)
        }
        Command::Audit {
            common,
            tolerance,
            strict,
        } => {
            let (problem, table) = builtin(&common)?;
            let verdicts = audit_table(&problem, &table, tolerance)?;
            emit(&common, &render_audit(problem.name(), &verdicts, common.format)?)?;
            let dirty: Vec<&str> = verdicts
                .iter()
                .filter(|v| !v.is_clean())
                .map(|v| v.source.as_str())
                .collect();
            if strict && !dirty.is_empty() {
                return Err(Failure::AuditMismatch(dirty.join(", ")));
            }
            Ok(())
        }
        Command::Compare { common, solver, runs } => {
            let (problem, table) = builtin(&common)?;
            let summary = run_batch(&problem, runs, solver.seed, &solver.config())?;
            let Some(best) = summary.best_run else {
                let reason = summary
                    .records
                    .iter()
                    .find_map(|r| r.error.clone())
                    .unwrap_or_else(|| "no run completed".into());
                return Err(Failure::NoCompletedRun(reason));
            };
            emit(&common, &render_comparison(&problem, &table, &best, common.format)?)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Core(e)) => {
            eprintln!("error: {e}");
            match e {
                Error::Eval(_) | Error::StepEvaluation { .. } => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
        Err(Failure::NoCompletedRun(reason)) => {
            eprintln!("error: no run completed: {reason}");
            ExitCode::from(2)
        }
        Err(Failure::AuditMismatch(rows)) => {
            eprintln!("audit mismatch in rows: {rows}");
            ExitCode::from(3)
        }
    }
}
