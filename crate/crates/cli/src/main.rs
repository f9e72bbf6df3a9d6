//! `metrack`: batch front end for the activity, daily-routine and energy
//! pipeline. Each subcommand reads files, writes files into `--out` along
//! with a `manifest.json`, and prints a short report.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "metrack", version, about)]
struct Cli {
    /// Pipeline configuration (JSON); missing fields take their defaults
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Overrides the configured seed
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory, created if needed
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate sensor sessions, day traces and ground-truth energy
    Simulate {
        /// Schedule template (JSON) replacing the configured one
        #[arg(long)]
        template: Option<PathBuf>,
    },
    /// Filter, window and extract features from labelled sensor sessions
    Features {
        /// Session manifest (JSON)
        #[arg(long)]
        sessions: PathBuf,
    },
    /// Train the physical activity decision tree
    TrainPa {
        /// Feature matrix (.csv or .bin)
        #[arg(long)]
        features: PathBuf,
    },
    /// Cross-validate the decision tree and print the confusion matrix
    EvalPa {
        #[arg(long)]
        features: PathBuf,
        /// Number of folds (defaults to the configured value)
        #[arg(long)]
        folds: Option<usize>,
    },
    /// Estimate the daily activity model from day traces
    TrainPomdp {
        /// Trace CSVs, or directories of them
        #[arg(long, num_args = 1.., required = true)]
        traces: Vec<PathBuf>,
        /// Keep the raw observation frequencies
        #[arg(long)]
        no_smoothing: bool,
    },
    /// Track daily activities minute by minute and score them
    InferDay {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, num_args = 1.., required = true)]
        traces: Vec<PathBuf>,
    },
    /// Energy expenditure from predictions or from activity segments
    EstimateEe(EeArgs),
}

#[derive(Args, Debug)]
struct EeArgs {
    /// Predictions CSV written by infer-day
    #[arg(long, requires = "truth", conflicts_with = "segments")]
    predictions: Option<PathBuf>,
    /// Trace CSV holding the true activities
    #[arg(long)]
    truth: Option<PathBuf>,
    /// `code,minutes[,speed_kmh]` CSV
    #[arg(long, required_unless_present = "predictions")]
    segments: Option<PathBuf>,
    /// Subject weight in kg (defaults to the configured value)
    #[arg(long)]
    weight: Option<f64>,
    /// Use the walking speed in km/h as the MET of walking segments
    #[arg(long)]
    met_from_speed: bool,
    /// Compendium CSV replacing the bundled table
    #[arg(long)]
    compendium: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let kind = e
                .chain()
                .find_map(|c| {
                    c.downcast_ref::<metrack::Error>()
                        .map(metrack::Error::kind)
                        .or_else(|| c.downcast_ref::<std::io::Error>().map(|_| "io"))
                        .or_else(|| c.downcast_ref::<serde_json::Error>().map(|_| "json"))
                })
                .unwrap_or("other");
            let msg = format!("{e:#}").replace('\n', " ");
            eprintln!("error[{kind}]: {msg}");
            ExitCode::FAILURE
        }
    }
}
