mod commands;
mod rundir;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "swatnn", version, about = "Latent-space search over small neural networks")]
pub struct Cli {
    /// Worker threads; defaults to the available cores.
    #[arg(long, global = true, env = "SWATNN_THREADS")]
    pub threads: Option<usize>,
    /// TOML run configuration, or a previously written resolved-config.json.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Global seed; overrides every seed in the configuration.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Train the multi-scale autoencoder and write a checkpoint.
    TrainAe(TrainAeArgs),
    /// Search the latent space of a trained autoencoder for a task.
    Search(SearchArgs),
    /// Train or prune a network with a reference method.
    Baseline(BaselineArgs),
    /// Generate benchmark datasets.
    BenchGen(BenchGenArgs),
    /// Map decoded-network distance over a latent plane.
    ProbeSmoothness(ProbeArgs),
    /// Replace parts of a deep network with shallower searched ones.
    Compress(CompressArgs),
    /// Aggregate result files into CSV tables.
    Report(ReportArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum PrecisionArg {
    F32,
    F64,
}

#[derive(Args, Debug)]
pub struct TrainAeArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batches: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long, value_enum)]
    pub precision: Option<PrecisionArg>,
}

#[derive(Args, Debug)]
pub struct SearchArgs {
    #[command(flatten)]
    pub common: Common,
    /// Autoencoder checkpoint.
    #[arg(long)]
    pub ae: PathBuf,
    /// Dataset file written by bench-gen.
    #[arg(long)]
    pub task: PathBuf,
    /// none, small, medium, large, or a JSON file of penalty settings.
    #[arg(long)]
    pub penalty: Option<String>,
    #[arg(long)]
    pub steps: Option<u64>,
    #[arg(long)]
    pub lr: Option<f64>,
    /// Comma-separated decoder indices; defaults to all.
    #[arg(long, value_delimiter = ',')]
    pub decoders: Option<Vec<usize>>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum BaselineMethod {
    Traditional,
    Admm,
}

#[derive(Args, Debug)]
pub struct BaselineArgs {
    #[arg(value_enum)]
    pub method: BaselineMethod,
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub task: PathBuf,
    /// depth,width,activation of the directly trained network.
    #[arg(long)]
    pub arch: Option<String>,
    /// Network to prune (admm); when absent one is trained from --arch.
    #[arg(long)]
    pub net: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct BenchGenArgs {
    #[command(flatten)]
    pub common: Common,
    /// Builtin function name, or `all`.
    #[arg(long)]
    pub task: String,
}

#[derive(Args, Debug)]
pub struct ProbeArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub ae: PathBuf,
    #[arg(long)]
    pub decoder: Option<usize>,
}

#[derive(Args, Debug)]
pub struct CompressArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub ae: PathBuf,
    /// Network JSON to compress.
    #[arg(long)]
    pub net: PathBuf,
    /// Comma-separated hidden layers after which to split.
    #[arg(long, value_delimiter = ',')]
    pub cuts: Option<Vec<usize>>,
    /// Comma-separated hidden-layer counts, one per part.
    #[arg(long, value_delimiter = ',')]
    pub targets: Option<Vec<usize>>,
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    #[arg(long)]
    pub out: PathBuf,
    /// Run directories or result.json files.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
}

fn error_record(err: &anyhow::Error) -> serde_json::Value {
    let category = err
        .chain()
        .find_map(|e| e.downcast_ref::<swatnn_core::Error>())
        .map_or("runtime", swatnn_core::Error::category);
    serde_json::json!({ "error": { "category": category, "message": format!("{err:#}") } })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match commands::dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{}", error_record(&err));
            ExitCode::from(1)
        }
    }
}
