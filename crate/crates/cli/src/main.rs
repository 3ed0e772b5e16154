//! Command-line front end: dataset synthesis, marginal and copula fitting,
//! path TTD estimation, goodness-of-fit, and the segment-count sweep.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::Settings;
use crate::output::OutputFormat;

#[derive(Debug, Parser)]
#[command(
    name = "pathttd",
    version,
    about = "Path travel-time distributions from per-segment trips: \
             Gaussian-mixture marginals coupled by fitted copulas, scored \
             against the empirical reference"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// RNG seed for every stochastic step (default 42).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output file; estimate-path treats this as an output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Format for results on stdout (default json).
    #[arg(long, global = true, value_enum)]
    format: Option<OutputFormat>,

    /// Optional JSON config supplying defaults for unset flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Synthesize a trip dataset from a built-in or file-based scenario.
    Synth(SynthArgs),
    /// Fit per-segment Gaussian-mixture marginals.
    FitMarginals(FitMarginalsArgs),
    /// Fit copula families on pseudo-observations.
    FitCopula(FitCopulaArgs),
    /// Estimate the path TTD by every model and score against the empirical
    /// reference.
    EstimatePath(EstimatePathArgs),
    /// KS and CvM between two travel-time sample files.
    Gof(GofArgs),
    /// Fit and score convolution and copula models over path prefixes 2..=S.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// Built-in scenario name (`leopoldstrasse`).
    #[arg(long, conflicts_with = "spec_file")]
    spec: Option<String>,

    /// JSON file with marginals, coupling, n_trips, and seed.
    #[arg(long)]
    spec_file: Option<PathBuf>,

    /// Number of trips to draw (default: the scenario's own count).
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    n: Option<u64>,

    /// Fraction of rows with one proportional adjacent segment pair.
    #[arg(long)]
    gps_artifact: Option<f64>,
}

#[derive(Debug, Args)]
struct FitMarginalsArgs {
    /// Trip CSV (`drive_id,segment_id,travel_time_s`).
    #[arg(long)]
    input: PathBuf,

    /// Comma-separated segment ids (default: all segments in the file).
    #[arg(long, value_delimiter = ',')]
    segments: Option<Vec<u32>>,

    /// Mixture components per segment (default 3).
    #[arg(long)]
    k: Option<usize>,
}

#[derive(Debug, Args)]
struct FitCopulaArgs {
    #[arg(long)]
    input: PathBuf,

    #[arg(long, value_delimiter = ',')]
    segments: Option<Vec<u32>>,

    /// Families to fit (default: gaussian,student_t,clayton,gumbel).
    #[arg(long, value_delimiter = ',')]
    families: Option<Vec<String>>,

    /// Pseudo-observation mode: empirical ranks or fitted-marginal CDFs.
    #[arg(long, value_enum)]
    pseudo: Option<config::PseudoMode>,

    /// Mixture components for parametric pseudo-observations (default 3).
    #[arg(long)]
    k: Option<usize>,
}

#[derive(Debug, Args)]
struct EstimatePathArgs {
    #[arg(long)]
    input: PathBuf,

    #[arg(long, value_delimiter = ',')]
    segments: Option<Vec<u32>>,

    #[arg(long, value_delimiter = ',')]
    families: Option<Vec<String>>,

    #[arg(long, value_enum)]
    pseudo: Option<config::PseudoMode>,

    #[arg(long)]
    k: Option<usize>,

    /// Monte-Carlo draws per model estimate (default 100000).
    #[arg(long)]
    m: Option<usize>,
}

#[derive(Debug, Args)]
struct GofArgs {
    /// Reference sample CSV (`travel_time_s` per line).
    #[arg(long)]
    reference: PathBuf,

    /// Model sample CSV to score against the reference.
    #[arg(long)]
    model: PathBuf,

    /// Label for the report's model column.
    #[arg(long)]
    label: Option<String>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long)]
    input: PathBuf,

    /// Copula families to sweep besides the convolution (default clayton).
    #[arg(long, value_delimiter = ',', conflicts_with = "all_families")]
    families: Option<Vec<String>>,

    /// Sweep all four copula families.
    #[arg(long)]
    all_families: bool,

    #[arg(long, value_enum)]
    pseudo: Option<config::PseudoMode>,

    #[arg(long)]
    k: Option<usize>,

    #[arg(long)]
    m: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let settings = match Settings::resolve(cli.config.as_deref(), cli.seed, cli.format, cli.out) {
        Ok(s) => s,
        Err(e) => return fail(e),
    };
    let result = match cli.command {
        Command::Synth(args) => commands::synth::run(args, &settings),
        Command::FitMarginals(args) => commands::fit_marginals::run(args, &settings),
        Command::FitCopula(args) => commands::fit_copula::run(args, &settings),
        Command::EstimatePath(args) => commands::estimate_path::run(args, &settings),
        Command::Gof(args) => commands::gof_cmd::run(args, &settings),
        Command::Sweep(args) => commands::sweep::run(args, &settings),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e),
    }
}

fn fail(e: commands::CliError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code())
}
