//! `mslab`: batch driver for model-space experiments.

mod config;
mod report;
mod tasks;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use mslab_core::invariance::recover_symbol;
use mslab_core::io::{matrix_rows, space_summary, vector_pairs, write_json};
use mslab_core::symbols::compress_symbol;
use mslab_core::symmetry::build_cu;
use serde_json::json;

use crate::config::{ExperimentConfig, OperatorSpec, TaskSpec};
use crate::tasks::Runner;

#[derive(Parser)]
#[command(name = "mslab", version, about = "Model-space experiments for contractions with defect indices (1,1)")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every task of a config and write a JSON report.
    Run {
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Seed for randomized families; overrides the config.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Write one object of the first (or chosen) order as JSON.
    Dump {
        config: PathBuf,
        #[arg(long, value_enum)]
        target: Target,
        #[arg(long)]
        out: PathBuf,
        /// Truncation order; defaults to the first configured one.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Target {
    /// Matrix of S_u.
    Su,
    K0,
    Ktilde0,
    /// Raw coefficient columns of the orthonormal basis.
    Onb,
    /// Coordinate matrix of C_u.
    Cu,
    /// Symbol recovered from the first operator of the config, or from S_u.
    Recovered,
    /// Space summary and diagnostics.
    Space,
}

fn first_operator(cfg: &ExperimentConfig) -> OperatorSpec {
    cfg.tasks
        .iter()
        .find_map(|t| match t {
            TaskSpec::Invariance { operator, .. }
            | TaskSpec::Recover { operator }
            | TaskSpec::Symmetry { operator }
            | TaskSpec::Dsweep { operator } => Some(operator.clone()),
            _ => None,
        })
        .unwrap_or(OperatorSpec::Shift)
}

fn base_dir(config: &Path) -> PathBuf {
    config.parent().map(Path::to_path_buf).unwrap_or_default()
}

fn dump(runner: &Runner, target: Target, n: Option<usize>, out: &Path) -> Result<(), String> {
    let space = runner.space(n)?;
    let io = |e: mslab_core::Error| e.to_string();
    match target {
        Target::Su => write_json(out, &matrix_rows(space.su())).map_err(io),
        Target::K0 => write_json(out, &vector_pairs(&space.k0().coords)).map_err(io),
        Target::Ktilde0 => write_json(out, &vector_pairs(&space.ktilde0().coords)).map_err(io),
        Target::Onb => write_json(out, &matrix_rows(space.onb())).map_err(io),
        Target::Cu => write_json(out, &matrix_rows(&build_cu(space).map_err(io)?.mc)).map_err(io),
        Target::Space => write_json(out, &space_summary(space)).map_err(io),
        Target::Recovered => {
            let t = match first_operator(runner.config()) {
                OperatorSpec::Symbol { symbol } => compress_symbol(space, &runner.load_symbol(&symbol)?),
                _ => space.su().clone(),
            };
            let rec = recover_symbol(space, &t, runner.config().tolerances.tol_accept).map_err(io)?;
            let value = json!({ "symbol": rec.symbol, "certificate": rec.certificate });
            write_json(out, &value).map_err(io)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, out, seed } => {
            let cfg = match ExperimentConfig::load(&config) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(2);
                }
            };
            let runner = Runner::new(cfg, &base_dir(&config), seed);
            let report = runner.run();
            for t in &report.tasks {
                for r in &t.results {
                    let status = if r.pass() { "PASS" } else { "FAIL" };
                    let detail = match &r.error {
                        Some(e) => format!("error: {e}"),
                        None => format!("{} checks", r.checks.len()),
                    };
                    println!("{status} task {} [{}] N={}: {detail}", t.index, t.task, r.n);
                }
            }
            if let Err(e) = write_json(&out, &report) {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
            if report.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Command::Dump { config, target, out, n, seed } => {
            let cfg = match ExperimentConfig::load(&config) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(2);
                }
            };
            let runner = Runner::new(cfg, &base_dir(&config), seed);
            match dump(&runner, target, n, &out) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::FAILURE
                }
            }
        }
    }
}
