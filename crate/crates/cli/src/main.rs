//! `geneval` command-line entry point.
//!
//! Exit codes: 0 success, 1 internal fault, 2 user or input error.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use geneval::featurestore::fetch::API_KEY_ENV;
use geneval::{Metric, ReportFormat};

#[derive(Debug, Parser)]
#[command(name = "geneval", version, about = "Evaluate and compare generated-image models")]
pub struct Cli {
    /// Run configuration (JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for splitting and model fitting; overrides the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Where outputs are written; overrides the config.
    #[arg(long, global = true)]
    pub output_dir: Option<PathBuf>,
    /// Report formats (markdown, csv, json); repeatable or comma-separated.
    #[arg(long, global = true, value_delimiter = ',')]
    pub format: Vec<ReportFormat>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Search for stock photos and add them to the manifest.
    Fetch(FetchArgs),
    /// Assign manifest records to train/val/test.
    Split(SplitArgs),
    /// Score generated images and write per-variant CSVs.
    Score(ScoreArgs),
    /// Build model-comparison tables from means or score outputs.
    Report,
    /// Analyse paired-preference survey responses.
    Survey(SurveyArgs),
}

#[derive(Debug, Args)]
pub struct FetchArgs {
    #[arg(long)]
    pub query: String,
    #[arg(long, default_value_t = 30)]
    pub count: usize,
    /// Manifest to append to; created when missing.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Directory for downloaded files (default: <output-dir>/images).
    #[arg(long)]
    pub dest: Option<PathBuf>,
    #[arg(long, env = API_KEY_ENV, hide_env_values = true)]
    pub api_key: Option<String>,
    #[arg(long, hide = true, default_value = geneval::featurestore::fetch::DEFAULT_BASE_URL)]
    pub base_url: String,
    /// Request-rate ceiling; 0 disables throttling.
    #[arg(long, default_value_t = 5.0)]
    pub max_rps: f64,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// train,val,test fractions; defaults to the manifest's own.
    #[arg(long, value_delimiter = ',', num_args = 3)]
    pub ratios: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    /// Metric to score; all configured metrics when omitted.
    #[arg(long)]
    pub metric: Option<Metric>,
}

#[derive(Debug, Args)]
pub struct SurveyArgs {
    /// Response CSV; falls back to the config's survey_path.
    pub input: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
