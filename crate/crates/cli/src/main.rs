//! `fgrelax` experiment runner.
//!
//! Exit codes: 0 success, 1 other failure, 2 configuration error,
//! 3 numerical abort (including sweeps with failed rows, after the results
//! have been written).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fgrelax::experiments::{emit_results, load_config, run_experiment, Cell, ExperimentKind, ResultTable};
use fgrelax::Error;

#[derive(Parser)]
#[command(name = "fgrelax", version, about = "Relaxation of the Green-Naghdi equations: experiment runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// FG against GN error as lambda grows, from order-2 prepared data.
    ConvergenceLambda(Common),
    /// Preparedness monitors over lambda and preparation order.
    PreparednessSweep(Common),
    /// Per-step cost of FG and GN with elliptic solve counts.
    BenchmarkCost(Common),
    /// Oscillator and combined toy models.
    ToyDemo(Common),
    /// One FG run with per-snapshot monitors and field dumps.
    SingleRun(Common),
}

#[derive(Args)]
struct Common {
    /// TOML config; defaults are used for anything omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output_dir` in the config).
    #[arg(long)]
    output: Option<PathBuf>,
    /// Worker threads for sweep points.
    #[arg(long)]
    jobs: Option<usize>,
    /// Reserved; all experiments are deterministic.
    #[arg(long)]
    seed: Option<u64>,
    /// `key=value` with a dotted key, e.g. `params.lambda=[1e3,1e4]`. Repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl Command {
    fn split(self) -> (ExperimentKind, Common) {
        match self {
            Command::ConvergenceLambda(c) => (ExperimentKind::ConvergenceLambda, c),
            Command::PreparednessSweep(c) => (ExperimentKind::PreparednessSweep, c),
            Command::BenchmarkCost(c) => (ExperimentKind::BenchmarkCost, c),
            Command::ToyDemo(c) => (ExperimentKind::ToyDemo, c),
            Command::SingleRun(c) => (ExperimentKind::SingleRun, c),
        }
    }
}

fn failed_rows(table: &ResultTable) -> usize {
    let Some(i) = table.column_index("status") else { return 0 };
    table.rows.iter().filter(|r| matches!(&r[i], Cell::Text(s) if s != "ok")).count()
}

fn run(kind: ExperimentKind, common: Common) -> Result<ResultTable, Error> {
    let mut cfg = load_config(common.config.as_deref(), &common.overrides)?;
    if let Some(named) = cfg.experiment {
        if named != kind {
            return Err(Error::Config {
                path: "experiment".into(),
                message: format!("config is for `{}`, command is `{}`", named.name(), kind.name()),
            });
        }
    }
    cfg.experiment = Some(kind);
    let _ = common.seed;
    let dir = common
        .output
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("results").join(kind.name()));

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(jobs) = common.jobs {
        if jobs == 0 {
            return Err(Error::Config { path: "--jobs".into(), message: "must be positive".into() });
        }
        pool = pool.num_threads(jobs);
    }
    let pool = pool.build().map_err(|e| Error::Output(e.to_string()))?;
    let table = pool.install(|| run_experiment(kind, &cfg))?;

    let files = emit_results(&table, &dir)?;
    println!("{}: {} rows", table.name, table.rows.len());
    for (name, fit) in &table.fits {
        match fit.slope {
            Some(s) => println!("  fit {name}: slope {s:.4} over {} points", fit.points),
            None => println!("  fit {name}: degenerate ({} usable points)", fit.points),
        }
    }
    for f in files {
        println!("  wrote {}", f.display());
    }
    Ok(table)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, common) = cli.command.split();
    match run(kind, common) {
        Ok(table) => {
            let failed = failed_rows(&table);
            if failed > 0 {
                eprintln!("error: {failed} run(s) aborted, see the status column");
                ExitCode::from(3)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config_error() {
                ExitCode::from(2)
            } else if e.is_numerical_abort() {
                ExitCode::from(3)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
