//! `qsrgs`: controller synthesis, certification, supply-rate composition,
//! scheduling families and manipulator simulation from scenario files.

mod commands;
mod error;
mod plot;
mod report;
mod scenario;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{ComposeArgs, Globals, Theorem};
use error::CliError;
use scenario::Mode;

#[derive(Parser)]
#[command(name = "qsrgs", version, about = "Matrix gain-scheduling of QSR-dissipative systems")]
struct Cli {
    /// Directory for written files (overrides `[sim] output_dir`).
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    /// Recorded in reports; no command is stochastic.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Time step (s), overrides `[sim] dt`.
    #[arg(long, global = true)]
    dt: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Design and certify one controller per linearization point.
    Synthesize {
        #[arg(long)]
        scenario: PathBuf,
    },
    /// Check the dissipativity LMI and closed-loop stability of controller files.
    Certify {
        /// Controller files or bank manifests.
        #[arg(required = true)]
        files: Vec<PathBuf>,
        /// Plant parameters for the stability check.
        #[arg(long)]
        scenario: Option<PathBuf>,
    },
    /// Compose subsystem supply rates into the scheduled system's supply rate.
    Compose {
        #[arg(long)]
        scenario: Option<PathBuf>,
        /// Controller bank manifest.
        #[arg(long)]
        bank: Option<PathBuf>,
        #[arg(long, num_args = 1..)]
        triples: Vec<PathBuf>,
        #[arg(long, num_args = 1..)]
        families: Vec<PathBuf>,
        #[arg(long, value_enum, default_value = "auto")]
        theorem: Theorem,
        /// passive, isp, osp, vsp, finite-l2 or conic.
        #[arg(long)]
        special: Option<String>,
    },
    /// Scheduling-family files.
    Schedule {
        #[command(subcommand)]
        action: ScheduleCommand,
    },
    /// Closed-loop manipulator simulation.
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        /// Run unscheduled, scalar and matrix scheduling and compare them.
        #[arg(long)]
        compare: bool,
        /// Controller bank manifest; synthesized in memory when absent.
        #[arg(long)]
        bank: Option<PathBuf>,
    },
    Version,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum BuildMode {
    Scalar,
    Matrix,
}

#[derive(Subcommand)]
enum ScheduleCommand {
    /// Sample the built-in families on the scenario grid and write them.
    Build {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, value_enum)]
        mode: Option<BuildMode>,
    },
    /// Check pseudo-commutation of families against S.
    Verify {
        #[arg(long, num_args = 1.., required = true)]
        families: Vec<PathBuf>,
        /// Triple whose S is used; defaults to the controller cross term.
        #[arg(long)]
        triple: Option<PathBuf>,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Singular-value bounds and activity of a bank of families.
    Bounds {
        #[arg(long, num_args = 1.., required = true)]
        families: Vec<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<String, CliError> {
    let globals = Globals {
        output_dir: cli.output_dir,
        seed: cli.seed,
        dt: cli.dt,
    };
    match cli.command {
        Command::Synthesize { scenario } => commands::synthesize(&globals, &scenario),
        Command::Certify { files, scenario } => commands::certify(&globals, &files, scenario.as_deref()),
        Command::Compose {
            scenario,
            bank,
            triples,
            families,
            theorem,
            special,
        } => commands::compose(
            &globals,
            &ComposeArgs {
                scenario,
                bank,
                triples,
                families,
                theorem,
                special,
            },
        ),
        Command::Schedule { action } => match action {
            ScheduleCommand::Build { scenario, mode } => {
                let mode = mode.map(|m| match m {
                    BuildMode::Scalar => Mode::Scalar,
                    BuildMode::Matrix => Mode::Matrix,
                });
                commands::schedule_build(&globals, &scenario, mode)
            }
            ScheduleCommand::Verify { families, triple, tol } => {
                commands::schedule_verify(&globals, &families, triple.as_deref(), tol)
            }
            ScheduleCommand::Bounds { families } => commands::schedule_bounds(&globals, &families),
        },
        Command::Simulate {
            scenario,
            compare,
            bank,
        } => commands::simulate(&globals, &scenario, compare, bank.as_deref()),
        Command::Version => Ok(format!("qsrgs {}\n", env!("CARGO_PKG_VERSION"))),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
