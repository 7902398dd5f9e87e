//! `corrtrack`: track sequences, evaluate results and rank feature providers.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use corrtrack::Error;

#[derive(Debug, Parser)]
#[command(
    name = "corrtrack",
    version,
    about = "Continuous-domain correlation filter tracker and benchmark harness"
)]
struct Cli {
    /// Worker threads for sequence-level parallelism (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Tracker configuration file (TOML key = value); flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FeatureKind {
    Hog,
    Fmap,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Track one OTB-style sequence from its first annotated box.
    Track(TrackArgs),
    /// Score result files against a dataset.
    Eval(EvalArgs),
    /// Run several feature providers over a dataset and rank them.
    Rank(RankArgs),
}

#[derive(Debug, clap::Args)]
pub struct TrackArgs {
    /// Sequence directory containing `img/` and `groundtruth_rect.txt`.
    #[arg(long)]
    pub sequence: PathBuf,
    #[arg(long, value_enum)]
    pub features: Option<FeatureKind>,
    /// Directory of `frame_%06d.fmap` files for this sequence.
    #[arg(long)]
    pub fmap_dir: Option<PathBuf>,
    /// FMAP block holding segmentation scores for the semantic mask.
    #[arg(long)]
    pub semantic_block: Option<String>,
    /// HOG cell size in pixels.
    #[arg(long)]
    pub hog_cell: Option<usize>,
    /// Temporal learning rate of the filter update.
    #[arg(long)]
    pub learning_rate: Option<f64>,
    /// Conjugate-gradient iterations per frame after the first.
    #[arg(long)]
    pub cg_iterations: Option<usize>,
    /// Output directory (created if missing).
    #[arg(long)]
    pub out: PathBuf,
    /// Write the semantic masks of every frame as PGM images.
    #[arg(long)]
    pub dump_masks: bool,
    /// Write every confidence map as CSV.
    #[arg(long)]
    pub dump_scores: bool,
    /// Write per-frame objective and solver residual as CSV.
    #[arg(long)]
    pub diagnostics: bool,
}

#[derive(Debug, clap::Args)]
pub struct EvalArgs {
    /// Dataset root with one directory per sequence.
    #[arg(long)]
    pub dataset: PathBuf,
    /// Result directories holding `<sequence>.jsonl` files, one per tracker.
    #[arg(long, required = true, num_args = 1..)]
    pub results: Vec<PathBuf>,
    /// Output directory for the report and curve CSVs.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, clap::Args)]
pub struct RankArgs {
    /// TOML file listing `[[provider]]` entries.
    #[arg(long)]
    pub manifest: PathBuf,
    /// Dataset root with one directory per sequence.
    #[arg(long)]
    pub dataset: PathBuf,
    /// Output directory for the ranking, report and curve CSVs.
    #[arg(long)]
    pub out: PathBuf,
}

fn exit_code(err: &Error) -> u8 {
    match err.root() {
        Error::Config(_) => 2,
        _ => 3,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("CORRTRACK_LOG", "warn")).init();
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            eprintln!("error: --jobs must be positive");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            log::warn!("could not size the worker pool: {e}");
        }
    }
    let result = match &cli.command {
        Command::Track(args) => commands::track(args, cli.config.as_deref()),
        Command::Eval(args) => commands::eval(args),
        Command::Rank(args) => commands::rank(args, cli.config.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
