//! `gfwp`: generate benchmark series, train and evaluate fast-weight
//! programmers, forecast sunspot cycles and benchmark the prefix scan.

mod commands;
mod config;
mod error;
mod manifest;

use clap::{Args, Parser, Subcommand};
use config::Task;
use error::CliError;
use gfwp_core::train::LossKind;
use gfwp_core::Variant;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, Parser)]
#[command(name = "gfwp", version, about = "Gated QKAN fast-weight programmers")]
pub struct Cli {
    /// Worker threads (default: available cores; 1 is bit-reproducible).
    #[arg(long, global = true, env = "GFWP_THREADS")]
    threads: Option<usize>,
    /// TOML file with default settings; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// More log output (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a benchmark series as CSV.
    Gen(GenArgs),
    /// Train a model and write a checkpoint with its logs.
    Train(TrainArgs),
    /// Evaluate a checkpoint on the test split of a series.
    Eval(EvalArgs),
    /// Forecast from the final available window of a series.
    Forecast(ForecastArgs),
    /// Time sequential and parallel scans.
    ScanBench(ScanBenchArgs),
    /// Train every variant at several window sizes over several seeds.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// shm, bessel, narma5, narma10, dqc or jc.
    dataset: String,
    /// Output CSV path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Number of samples.
    #[arg(long)]
    points: Option<usize>,
    /// End of the sampled time or argument range.
    #[arg(long)]
    t_max: Option<f64>,
}

fn parse_variant(s: &str) -> Result<Variant, String> {
    s.parse().map_err(|e: gfwp_core::FastWeightError| e.to_string())
}

fn parse_loss(s: &str) -> Result<LossKind, String> {
    s.parse().map_err(|e: gfwp_core::TrainError| e.to_string())
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// fwp (alias fwp-ungated), g-fwp, gqkan-fwp, g-qkanfwp, gqkan-qkanfwp.
    #[arg(long, value_parser = parse_variant)]
    variant: Variant,
    /// Series CSV, or a SILSO text file (any other extension).
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum, default_value = "series")]
    task: Task,
    /// Input window length.
    #[arg(short = 'N', long = "window")]
    window: Option<usize>,
    /// Forecast horizon.
    #[arg(short = 'H', long)]
    horizon: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    batch: Option<usize>,
    /// mse or peak-aware.
    #[arg(long, value_parser = parse_loss)]
    loss: Option<LossKind>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "runs/train")]
    out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Estimate the fast programmer's expectations from this many shots.
    #[arg(long)]
    shots: Option<u64>,
    /// Seed of the shot-sampling stream (default: the checkpoint's).
    #[arg(long)]
    seed: Option<u64>,
    /// Write gate/norm trajectory CSV and β JSON for the last test window.
    #[arg(long)]
    export_trajectory: bool,
    /// Output directory (default: `eval/` next to the checkpoint).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ForecastArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    /// SILSO monthly file (or series CSV).
    #[arg(long)]
    silso: PathBuf,
    /// Output directory (default: `forecast/` next to the checkpoint).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScanBenchArgs {
    /// Sequence lengths.
    #[arg(long = "t", value_delimiter = ',', default_values_t = [4096usize, 16384, 65536, 262144, 1048576])]
    ts: Vec<usize>,
    /// Worker counts for the parallel scan.
    #[arg(long = "p", value_delimiter = ',', default_values_t = [1usize, 2, 4, 8])]
    ps: Vec<usize>,
    /// Width of the scanned state.
    #[arg(long, default_value_t = 4)]
    dim: usize,
    /// Repetitions per point (minimum wall time is kept).
    #[arg(long, default_value_t = 3)]
    reps: usize,
    #[arg(long, default_value = "runs/scan-bench")]
    out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, value_delimiter = ',', value_parser = parse_variant, default_values = ["fwp", "g-fwp", "gqkan-fwp", "g-qkanfwp", "gqkan-qkanfwp"])]
    variants: Vec<Variant>,
    /// Datasets to generate (shm, bessel, narma5, narma10, dqc, jc).
    #[arg(long, value_delimiter = ',', default_values = ["shm", "bessel", "narma5", "narma10", "dqc", "jc"])]
    datasets: Vec<String>,
    #[arg(long, value_delimiter = ',', default_values_t = [8usize, 16, 32, 64])]
    windows: Vec<usize>,
    /// Number of seeds (0, 1, …).
    #[arg(long, default_value_t = 5)]
    seeds: u64,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long, default_value = "runs/sweep")]
    out: PathBuf,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(p) => config::FileConfig::load(p)?,
        None => config::FileConfig::default(),
    };
    let threads = cli
        .threads
        .or(file.threads)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
        .max(1);
    match cli.command {
        Command::Gen(a) => commands::gen(a),
        Command::Train(a) => commands::train(a, &file, threads),
        Command::Eval(a) => commands::eval(a, threads),
        Command::Forecast(a) => commands::forecast(a),
        Command::ScanBench(a) => commands::scan_bench(a),
        Command::Sweep(a) => commands::sweep(a, &file, threads),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
