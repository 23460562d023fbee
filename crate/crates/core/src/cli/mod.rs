//! Command-line front end: TOML configuration, task dispatch and CSV output.

mod config;
mod table;
mod tasks;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

pub use config::{
    ApproxConfig, FactorizeConfig, FiguresConfig, ModeName, ResonanceConfig, RunConfig, SolverConfig, Task, TABLE1,
};
pub use table::{curve_table, format_num, parse_body, write_all, Artifact, Cell, Provenance, Table};

use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "cavity-ef", version, about = "Exact-factorization potentials of a double well in a cavity")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Lowest coupled eigenpairs and marginal densities.
    Solve(RunArgs),
    /// Exact factorization and inverted potentials of selected states.
    Factorize(RunArgs),
    /// Resonant cavity frequency for each configured coupling.
    Resonance(RunArgs),
    /// Analytical two-state approximation and its figure data.
    Approx(RunArgs),
    /// Exact versus analytical potentials at each figure point.
    Compare(RunArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// TOML configuration; built-in defaults when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory (overrides `output` in the config).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Run on a single worker thread.
    #[arg(long)]
    pub deterministic: bool,
}

impl Command {
    fn split(&self) -> (Task, &RunArgs) {
        match self {
            Command::Solve(a) => (Task::Solve, a),
            Command::Factorize(a) => (Task::Factorize, a),
            Command::Resonance(a) => (Task::Resonance, a),
            Command::Approx(a) => (Task::Approx, a),
            Command::Compare(a) => (Task::Compare, a),
        }
    }
}

/// Validates and runs a task, returning its artifacts without touching the disk.
pub fn run_tables(task: Task, cfg: &RunConfig) -> Result<Vec<Artifact>> {
    cfg.validate(task)?;
    match task {
        Task::Solve => tasks::solve_task(cfg),
        Task::Factorize => tasks::factorize_task(cfg),
        Task::Resonance => tasks::resonance_task(cfg),
        Task::Approx => tasks::approx_task(cfg),
        Task::Compare => tasks::compare_task(cfg),
    }
}

/// Header shared by the artifacts of one run; the embedded config omits the output path.
pub fn provenance(task: Task, cfg: &RunConfig) -> Provenance {
    let embedded = RunConfig {
        task: Some(task),
        output: None,
        ..cfg.clone()
    };
    Provenance {
        task: task.name().to_string(),
        digest: embedded.digest(),
        config: embedded.to_toml(),
    }
}

pub fn run(task: Task, cfg: &RunConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let artifacts = run_tables(task, cfg)?;
    write_all(out, &artifacts, &provenance(task, cfg))
}

/// Machine-readable description of a failure.
pub fn error_record(task: Option<Task>, e: &Error) -> serde_json::Value {
    let mut rec = serde_json::json!({
        "status": "error",
        "kind": e.kind(),
        "exit_code": e.exit_code(),
        "message": e.to_string(),
    });
    if let Some(t) = task {
        rec["task"] = t.name().into();
    }
    if let Error::Bracketing { trace, .. } = e {
        rec["trace"] = trace
            .iter()
            .map(|&(w, d, gap)| serde_json::json!({ "omega_c": w, "imbalance": d, "gap": gap }))
            .collect();
    }
    rec
}

fn execute(task: Task, args: &RunArgs) -> Result<Vec<PathBuf>> {
    let cfg = match &args.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let out = args
        .out
        .clone()
        .or_else(|| cfg.output.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    if args.deterministic {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .map_err(|e| Error::Numeric(format!("thread pool: {e}")))?;
        pool.install(|| run(task, &cfg, &out))
    } else {
        run(task, &cfg, &out)
    }
}

/// Parses the process arguments, runs the task and returns the exit code.
pub fn main_entry() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let (task, args) = cli.command.split();
    match execute(task, args) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            0
        }
        Err(e) => {
            eprintln!("{}", error_record(Some(task), &e));
            e.exit_code()
        }
    }
}
