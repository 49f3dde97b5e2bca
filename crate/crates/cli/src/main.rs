mod commands;
mod config;
mod report;
mod verify;

use anyhow::{bail, Result};
use choquard::Execution;
use clap::{Parser, Subcommand};
use commands::{code, Ctx};
use config::Config;
use std::path::PathBuf;
use std::process::ExitCode;

/// Radial ground states of Choquard equations with lower-critical exponent.
///
/// Exit codes: 0 success or converged, 1 error, 2 spreading, 3 verification failure.
#[derive(Debug, Parser)]
#[command(name = "choquard", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// TOML configuration; defaults are used for anything not given.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for reports and tables.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (1 runs everything sequentially).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed for randomised checks.
    #[arg(long, global = true, default_value_t = 7)]
    seed: u64,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Minimise the critical quotient for the configured potential.
    Solve,
    /// Solve the model potential over a grid of mu values.
    SweepMu,
    /// Run the identity battery.
    Verify,
    /// Tabulate the test-function functional over lambda.
    IvScan,
    /// Print the sharp constant for the configured (N, alpha).
    CInfty,
    /// Check the discrete Riesz potential against the extremal-profile identity.
    RieszSelftest,
}

fn run(cli: Cli) -> Result<i32> {
    let cfg = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    cfg.validate()?;
    let exec = match cli.threads {
        Some(0) => bail!("--threads must be at least 1"),
        Some(k) => {
            rayon::ThreadPoolBuilder::new().num_threads(k).build_global()?;
            if k == 1 {
                Execution::Sequential
            } else {
                Execution::Parallel
            }
        }
        None => Execution::default(),
    };
    let out = cli
        .out
        .clone()
        .or_else(|| cfg.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    std::fs::create_dir_all(&out)?;
    let ctx = Ctx {
        cfg,
        out,
        exec,
        seed: cli.seed,
    };
    match cli.cmd {
        Cmd::Solve => commands::solve(&ctx),
        Cmd::SweepMu => commands::sweep_mu(&ctx),
        Cmd::Verify => verify::run(&ctx),
        Cmd::IvScan => commands::iv_scan(&ctx),
        Cmd::CInfty => commands::c_infty(&ctx),
        Cmd::RieszSelftest => commands::riesz_selftest(&ctx),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // Usage errors share the generic error code; 2 is reserved for spreading.
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() {
                code::ERROR as u8
            } else {
                code::OK as u8
            });
        }
    };
    match run(cli) {
        Ok(c) => ExitCode::from(c as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(code::ERROR as u8)
        }
    }
}
