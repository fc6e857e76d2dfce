//! `etiquette`: extract driving events from trajectory logs, fit behavior
//! profiles, report them, simulate traffic from them and check the loop.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.

mod error;
mod events;
mod inputs;
mod pipeline;
mod plot;
mod simulate;
mod synth;

use std::panic;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use error::CliError;
use plot::Figure;

#[derive(Debug, Parser)]
#[command(
    name = "etiquette",
    version,
    about = "Driving-etiquette statistics and simulation pipeline"
)]
struct Cli {
    /// Log progress at info level (-v) or debug level (-vv). RUST_LOG overrides.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Segment a trajectory CSV into car-following episodes and cut-ins.
    Extract(ExtractArgs),
    /// Fit a profile from an event store.
    Fit(FitArgs),
    /// Print the summary statistics of a profile.
    Report(ReportArgs),
    /// Run the corridor simulation and write its trajectory log.
    Simulate(SimulateArgs),
    /// Re-extract and refit a log and compare against a profile.
    Check(CheckArgs),
    /// Write synthetic population and driver fixtures drawn from a profile.
    Synth(SynthArgs),
    /// Write histogram and fitted-density data for one figure as CSV.
    PlotData(PlotArgs),
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    /// Trajectory log CSV.
    input: PathBuf,
    /// Event store to write.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Event store written by `extract`.
    input: PathBuf,
    /// Profile file to write.
    #[arg(long)]
    out: PathBuf,
    /// Name stored in the profile.
    #[arg(long, default_value = "fitted")]
    name: String,
    /// Also fit per-driver feedback gains and store the population curves.
    #[arg(long)]
    gains: bool,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Builtin profile name or profile file.
    profile: String,
    /// Also write the rows as CSV.
    #[arg(long)]
    table: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Builtin profile name or profile file; overrides the config's profile.
    #[arg(long)]
    profile: Option<String>,
    /// JSON simulation config; missing keys take road-class defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Trajectory log CSV to write.
    #[arg(long)]
    out: PathBuf,
    /// Overrides the config's seed.
    #[arg(long, env = "ETIQUETTE_SEED")]
    seed: Option<u64>,
    /// Config override such as `duration=600` or `driver.k_ff=0.4`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    /// Trajectory log CSV, typically written by `simulate`.
    #[arg(long)]
    log: PathBuf,
    /// Builtin profile name or profile file the log is compared against.
    #[arg(long)]
    profile: String,
    /// Also refit feedback gains.
    #[arg(long)]
    gains: bool,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Builtin profile name or profile file.
    #[arg(long)]
    profile: String,
    /// Output directory, created if missing.
    #[arg(long)]
    out: PathBuf,
    /// Values drawn per field and road class.
    #[arg(long, default_value_t = 1000)]
    n: usize,
    /// Drivers sampled per road class.
    #[arg(long, default_value_t = 200)]
    drivers: usize,
    /// Base seed for every draw.
    #[arg(long, env = "ETIQUETTE_SEED", default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    /// Builtin profile name, profile file or event store.
    input: String,
    /// Figure whose field is plotted.
    #[arg(long, value_enum)]
    figure: Figure,
    /// CSV file to write.
    #[arg(long)]
    out: PathBuf,
    /// Histogram bins (event stores only).
    #[arg(long, default_value_t = 30)]
    bins: usize,
    /// Points on each density curve.
    #[arg(long, default_value_t = 200)]
    points: usize,
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .try_init();
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Extract(a) => pipeline::extract(&a),
        Command::Fit(a) => pipeline::fit(&a),
        Command::Report(a) => pipeline::report(&a),
        Command::Simulate(a) => simulate::run(&a),
        Command::Check(a) => pipeline::check(&a),
        Command::Synth(a) => synth::run(&a),
        Command::PlotData(a) => plot::run(&a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    init_logging(cli.verbose);
    match panic::catch_unwind(|| run(cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("etiquette: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
        Err(_) => ExitCode::from(3),
    }
}
