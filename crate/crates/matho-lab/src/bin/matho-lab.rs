//! Scenario-driven command-line front end.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use matho_lab::runner::{execute, Format};
use matho_lab::scenario::{Command, Overrides};

#[derive(Parser)]
#[command(name = "matho-lab", version, about = "Check truncated Toeplitz and Hankel operators on model spaces")]
struct Cli {
    #[arg(value_enum)]
    command: CommandArg,
    /// Scenario file (JSON).
    #[arg(long)]
    scenario: PathBuf,
    /// Acceptance threshold, overriding the scenario.
    #[arg(long)]
    tol: Option<f64>,
    /// Laurent window M, overriding the scenario.
    #[arg(long = "trunc-order")]
    trunc_order: Option<usize>,
    /// Seed for random batches, overriding the scenario.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = FormatArg::Json)]
    format: FormatArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum CommandArg {
    Space,
    Build,
    Check,
    Recover,
    Kernel,
    Verify,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Text,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // Help and version requests are not failures.
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    let command = match cli.command {
        CommandArg::Space => Command::Space,
        CommandArg::Build => Command::Build,
        CommandArg::Check => Command::Check,
        CommandArg::Recover => Command::Recover,
        CommandArg::Kernel => Command::Kernel,
        CommandArg::Verify => Command::Verify,
    };
    let format = match cli.format {
        FormatArg::Json => Format::Json,
        FormatArg::Text => Format::Text,
    };
    let overrides = Overrides {
        tolerance: cli.tol,
        trunc_order: cli.trunc_order,
        seed: cli.seed,
    };
    let (text, code) = execute(command, &cli.scenario, overrides, format);
    print!("{text}");
    ExitCode::from(code as u8)
}
