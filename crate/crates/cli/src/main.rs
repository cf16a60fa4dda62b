use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use gwascombine::{run, Command, RunConfig};
use gwascombine_core::dp::SimMode;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CommandArg {
    Dp,
    Power,
    Validate,
    NullSize,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Full,
    Fast,
}

/// Detection probability and power of rules for combining several GWA scans.
#[derive(Debug, Parser)]
#[command(name = "gwascombine", version)]
struct Cli {
    #[arg(value_enum)]
    command: CommandArg,

    /// Scenario JSON file, or a manifest.json from an earlier run.
    #[arg(long)]
    scenario: PathBuf,

    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,

    /// Worker threads; defaults to one per core.
    #[arg(long, env = "GWASCOMBINE_THREADS", value_parser = clap::value_parser!(u16).range(1..))]
    threads: Option<u16>,

    /// Replaces the scenario seed.
    #[arg(long)]
    seed: Option<u64>,

    /// Replaces the simulation mode of a DP scenario.
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = RunConfig {
        command: match cli.command {
            CommandArg::Dp => Command::Dp,
            CommandArg::Power => Command::Power,
            CommandArg::Validate => Command::Validate,
            CommandArg::NullSize => Command::NullSize,
        },
        scenario_path: cli.scenario,
        out_dir: cli.out,
        threads: cli.threads.map(usize::from),
        seed_override: cli.seed,
        mode_override: cli.mode.map(|m| match m {
            ModeArg::Full => SimMode::Full,
            ModeArg::Fast => SimMode::Fast,
        }),
    };
    match run(&config) {
        Ok(summary) => {
            eprintln!("{}", summary.message);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
