mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

/// Power-grid inspection imagery toolkit.
#[derive(Debug, Parser)]
#[command(name = "gridsight", version, about)]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// Configuration file of `section.key = value` lines.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory for PNG and JSON artifacts.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for batch processing.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Override any configuration key, e.g. `--set proposal.e_max=0.6`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    pub overrides: Vec<String>,
    /// More log output on stderr (repeat for debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Hotspot mask of a thermal frame.
    Thermal(commands::ThermalArgs),
    /// Canny edges, Hough lines, Gabor+PCA tower mask, confined lines.
    Structures(commands::StructuresArgs),
    /// Tower-to-vegetation clearance distances.
    Clearance(commands::ClearanceArgs),
    /// Wavelet region proposals.
    Propose(commands::ProposeArgs),
    /// Filter proposals with a trained model.
    Classify(commands::ClassifyArgs),
    /// Train the proposal classifier.
    Train(commands::TrainArgs),
    /// Platform sizing arithmetic.
    #[command(subcommand)]
    Platform(commands::PlatformCommand),
    /// Full inspection pipeline over a directory of images.
    Run(commands::RunArgs),
    /// Write synthetic demo inputs.
    Synth(commands::SynthArgs),
    /// Print the effective configuration.
    Config,
}

const EXIT_INPUT: u8 = 1;
const EXIT_PROCESSING: u8 = 2;
const EXIT_USAGE: u8 = 64;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.global.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .target(env_logger::Target::Stderr)
        .init();

    match commands::dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_input_error() { EXIT_INPUT } else { EXIT_PROCESSING })
        }
    }
}
