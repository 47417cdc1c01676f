//! `ais`: command-line harness for the immune-inspired toolkit.
//!
//! Subcommands cover both reference workloads: `recommend` runs the
//! immune-network recommender over a ratings file, `negsel-train` /
//! `negsel-monitor` drive flow anomaly detection, `dca` classifies antigen
//! streams, `clonal` runs clonal selection against a target pattern, and
//! `synth` generates seeded synthetic inputs with ground-truth manifests.
//!
//! Reports go to stdout, diagnostics to stderr, and the exit code is zero
//! exactly when the run completed. In `records` format the output is
//! line-delimited `key=value` pairs and is byte-identical across runs with
//! the same inputs and seed.

mod cmd_clonal;
mod cmd_dca;
mod cmd_negsel;
mod cmd_recommend;
mod cmd_synth;
mod config;
mod detector_store;
mod report;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "ais",
    version,
    about = "Immune-inspired recommendation and anomaly detection toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Recommend items to a target user via the immune-network dynamics.
    Recommend(cmd_recommend::RecommendArgs),
    /// Generate a censored detector set from self-labeled flows.
    NegselTrain(cmd_negsel::TrainArgs),
    /// Replay a flow log against a persisted detector set.
    NegselMonitor(cmd_negsel::MonitorArgs),
    /// Classify an antigen stream with the dendritic cell population.
    Dca(cmd_dca::DcaArgs),
    /// Evolve a population towards a target pattern by clonal selection.
    Clonal(cmd_clonal::ClonalArgs),
    /// Generate synthetic datasets plus ground-truth manifests.
    #[command(subcommand)]
    Synth(cmd_synth::SynthCommand),
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Recommend(args) => cmd_recommend::run(args),
        Command::NegselTrain(args) => cmd_negsel::train(args),
        Command::NegselMonitor(args) => cmd_negsel::monitor(args),
        Command::Dca(args) => cmd_dca::run(args),
        Command::Clonal(args) => cmd_clonal::run(args),
        Command::Synth(command) => cmd_synth::run(command),
    };
    if let Err(error) = result {
        eprintln!("error: {error:#}");
        std::process::exit(1);
    }
}
