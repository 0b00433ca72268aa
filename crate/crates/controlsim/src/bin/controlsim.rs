use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use controlsim::report::RunReport;
use controlsim::scenario::load_scenario;
use controlsim::{runner, Error};

/// Exit status 0: the run completed and every decision rule passed.
/// Exit status 2: the run completed and at least one rule rejected the
/// experiment. Exit status 1: the run itself failed (bad scenario, missing
/// file, impossible request).
#[derive(Parser)]
#[command(name = "controlsim", version, about = "Simulate and diagnose controlled experiments from scenario files")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    /// Deterministic JSON for downstream tools
    Machine,
    /// Human-readable text
    Summary,
}

#[derive(Args)]
struct CommonArgs {
    /// Scenario file (TOML)
    scenario: PathBuf,
    /// Override the scenario's seed
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = Format::Summary)]
    format: Format,
    /// Write the report here instead of stdout
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Check every control declaration against the science table
    Validate {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Draw an assignment, simulate measurements, and run all diagnostics
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Run the same pipeline as simulate, reported diagnostics-first
    Diagnose {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Run one of the scenario's pre-trial protocols
    Pretrial {
        #[command(flatten)]
        common: CommonArgs,
        /// Protocol id declared in the scenario
        #[arg(long)]
        protocol: String,
        /// Write the protocol's exclusion list (JSON) to this path;
        /// refused unless the protocol is registered
        #[arg(long)]
        write_exclusions: Option<PathBuf>,
    },
    /// Estimate rule power over the scenario's (arm size x flaw) grid
    Power {
        #[command(flatten)]
        common: CommonArgs,
        /// Override the scenario's replication count per cell
        #[arg(long)]
        replications: Option<usize>,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> controlsim::Result<ExitCode> {
    match cli.command {
        Command::Validate { common } => {
            let scenario = load_scenario(&common.scenario)?;
            emit(runner::run_validate(&scenario)?, &common)
        }
        Command::Simulate { common } => {
            let scenario = load_scenario(&common.scenario)?;
            emit(runner::run_simulate(&scenario, common.seed)?, &common)
        }
        Command::Diagnose { common } => {
            let scenario = load_scenario(&common.scenario)?;
            emit(runner::run_diagnose(&scenario, common.seed)?, &common)
        }
        Command::Pretrial { common, protocol, write_exclusions } => {
            let scenario = load_scenario(&common.scenario)?;
            let (report, exclusions) = runner::run_pretrial(&scenario, &protocol, common.seed)?;
            if let Some(path) = &write_exclusions {
                let list = exclusions.ok_or_else(|| Error::Unregistered(protocol.clone()))?;
                write_file(path, &list.to_json())?;
            }
            emit(report, &common)
        }
        Command::Power { common, replications } => {
            let scenario = load_scenario(&common.scenario)?;
            emit(runner::run_power(&scenario, common.seed, replications)?, &common)
        }
    }
}

fn emit(report: RunReport, common: &CommonArgs) -> controlsim::Result<ExitCode> {
    let text = match common.format {
        Format::Machine => report.to_machine(),
        Format::Summary => report.to_summary(),
    };
    match &common.output {
        Some(path) => write_file(path, &text)?,
        None => print!("{text}"),
    }
    Ok(ExitCode::from(report.exit_status() as u8))
}

fn write_file(path: &Path, text: &str) -> controlsim::Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Io(format!("cannot write {}: {e}", path.display())))
}
