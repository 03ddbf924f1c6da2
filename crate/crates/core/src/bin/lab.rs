//! `lab` — configuration-driven experiment runner.
//!
//! Exit codes: 0 all gates pass, 1 a gate failed, 2 invalid configuration
//! or parameters, 3 I/O failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use carleson_lab::cli::{configure_threads, emit, exit_code_for, run, Command, ExperimentConfig};
use carleson_lab::LabError;

#[derive(Parser)]
#[command(
    name = "lab",
    about = "Stopping-time approximants, Carleson measures, cone functionals, \
             boundary counting averages, and exact dyadic stopping families"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args)]
struct Common {
    /// Path to a JSON or TOML experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (default: config `out_dir`, then `lab-out`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Depth override: stopping depth for approximant commands, lattice
    /// depth for `fatou`, martingale depth for `goodlambda`.
    #[arg(long)]
    depth: Option<u32>,
    /// Master seed override.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build the approximant for each threshold and report errors and
    /// Carleson constants.
    Approximate(Common),
    /// Approximate plus structural checks: partition exactness, boundary
    /// and packing sums.
    Verify(Common),
    /// Classify the field against the admissible-class conditions.
    Classify(Common),
    /// Averaged boundary counting function over the radius ladder.
    Fatou(Common),
    /// Exact dyadic stopping families and their tail-decay table.
    Goodlambda(Common),
    /// Threshold sweep with normalized boundary/packing columns.
    Sweep(Common),
}

fn split(cmd: &Cmd) -> (Command, &Common) {
    match cmd {
        Cmd::Approximate(c) => (Command::Approximate, c),
        Cmd::Verify(c) => (Command::Verify, c),
        Cmd::Classify(c) => (Command::Classify, c),
        Cmd::Fatou(c) => (Command::Fatou, c),
        Cmd::Goodlambda(c) => (Command::Goodlambda, c),
        Cmd::Sweep(c) => (Command::Sweep, c),
    }
}

fn apply_overrides(config: &mut ExperimentConfig, command: Command, common: &Common) {
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    if let Some(depth) = common.depth {
        match command {
            Command::Goodlambda => config.goodlambda.depth = depth,
            Command::Fatou => config.counting.depth = depth,
            Command::Classify => {}
            _ => config.max_depth = depth,
        }
    }
}

fn execute(cmd: &Cmd) -> Result<bool, LabError> {
    let (command, common) = split(cmd);
    let mut config = ExperimentConfig::load(&common.config)?;
    apply_overrides(&mut config, command, common);
    config.validate()?;
    let artifacts = run(&config, command)?;
    let out_dir = common
        .out
        .clone()
        .or_else(|| config.out_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("lab-out"));
    let report_path = emit(&artifacts, &out_dir)?;
    for gate in &artifacts.gates {
        println!(
            "[{}] {}: {}",
            if gate.passed { "pass" } else { "FAIL" },
            gate.name,
            gate.detail
        );
    }
    println!("report: {}", report_path.display());
    Ok(artifacts.all_gates_pass())
}

fn main() -> ExitCode {
    configure_threads();
    let cli = Cli::parse();
    match execute(&cli.command) {
        Ok(true) => ExitCode::from(0),
        Ok(false) => ExitCode::from(1),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err) as u8)
        }
    }
}
