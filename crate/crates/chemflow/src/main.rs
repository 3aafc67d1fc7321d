use std::path::PathBuf;
use std::process::ExitCode;

use chemflow::commands::{execute, Command, Invocation};
use chemflow::config::{SweepAxis, ENV_PREFIX};
use clap::{Args, Parser, Subcommand};

/// Shear-thinning flow simulations with concentration-dependent power law.
///
/// Exit status: 0 when the run completes, 2 when blow-up is detected, 1 on
/// configuration or other errors.
#[derive(Parser)]
#[command(name = "chemflow", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Integrate one configuration.
    Run(Common),
    /// Twin runs from perturbed initial velocities.
    Twin(Common),
    /// Check energy and structural inequalities on a run.
    Verify(Common),
    /// Independent runs along one parameter axis.
    Sweep(Common),
}

#[derive(Args)]
struct Common {
    /// Configuration file (TOML).
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in configuration by name.
    #[arg(long)]
    preset: Option<String>,
    /// Output directory.
    #[arg(long, default_value = "chemflow-out")]
    out: PathBuf,
    /// Overrides the configuration seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for twin and sweep.
    #[arg(long)]
    workers: Option<usize>,
    /// Write field snapshots every this many steps.
    #[arg(long)]
    snapshot_every: Option<usize>,
    /// Existing output directory to verify.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Sweep axis: cutoff, eps or dt.
    #[arg(long)]
    axis: Option<SweepAxis>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (command, a) = match cli.command {
        Cmd::Run(a) => (Command::Run, a),
        Cmd::Twin(a) => (Command::Twin, a),
        Cmd::Verify(a) => (Command::Verify, a),
        Cmd::Sweep(a) => (Command::Sweep, a),
    };
    let inv = Invocation {
        command,
        config: a.config,
        preset: a.preset,
        out: a.out,
        seed: a.seed,
        workers: a.workers,
        snapshot_every: a.snapshot_every,
        input: a.input,
        axis: a.axis,
        env: std::env::vars().filter(|(k, _)| k.starts_with(ENV_PREFIX)).collect(),
    };
    let outcome = execute(&inv);
    if let Some(e) = &outcome.error {
        eprintln!("chemflow: {e}");
    }
    if let Some(m) = &outcome.manifest {
        if let Some(msg) = m.message.as_ref().filter(|_| outcome.error.is_none()) {
            eprintln!("chemflow: {msg}");
        }
        println!("{:?} ({} files in {})", m.termination, m.outputs.len(), inv.out.display());
    }
    ExitCode::from(outcome.exit_code)
}
