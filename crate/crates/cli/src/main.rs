use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use pvsize::{cmd_compare, cmd_optimize, cmd_synth, cmd_verify, Overrides, SynthArgs};

/// Size a DC-coupled PV-battery household system.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Size the system and write the schedule, KPIs and diagnostics.
    Optimize {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
        /// Also write normalized battery duration curves.
        #[arg(long)]
        duration_curves: bool,
    },
    /// Run the four loss formulations side by side.
    Compare {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
        /// Comma-separated subset, e.g. CC-CB,LC-LB.
        #[arg(long)]
        formulations: Option<String>,
    },
    /// Generate synthetic load and PV profiles.
    Synth(SynthArgs),
    /// Re-check the saved schedule of a previous optimize run.
    Verify {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let code = match Cli::parse().command {
        Command::Optimize { config, overrides, duration_curves } => cmd_optimize(&config, &overrides, duration_curves),
        Command::Compare { config, overrides, formulations } => cmd_compare(&config, &overrides, formulations.as_deref()),
        Command::Synth(args) => cmd_synth(&args),
        Command::Verify { config, overrides } => cmd_verify(&config, &overrides),
    };
    ExitCode::from(code as u8)
}
