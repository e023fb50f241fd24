mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dscr_core::ErrorKind;

#[derive(Parser, Debug)]
#[command(name = "dscr", version, about = "Hyperspectral super-resolution with depthwise separable convolutions")]
struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    /// Worker threads for the numeric kernels (default: all cores).
    #[arg(long, env = "DSCR_THREADS", global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate synthetic cubes.
    Synth(SynthArgs),
    /// Tile, filter, normalize, split and degrade cubes into a dataset directory.
    Prepare(PrepareArgs),
    /// Train a model on a prepared dataset.
    Train(TrainArgs),
    /// Super-resolve an LR cube with trained weights.
    Sr(SrArgs),
    /// Score reconstructions against a reference cube.
    Eval(EvalArgs),
    /// Check analytic gradients of a tiny network against finite differences.
    Gradcheck(GradcheckArgs),
    /// Print the trainable parameter count of an architecture.
    Params(ParamsArgs),
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 8)]
    pub channels: usize,
    #[arg(long, default_value_t = 512)]
    pub height: usize,
    #[arg(long, default_value_t = 256)]
    pub width: usize,
    #[arg(long, default_value_t = 1)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Band the cubes are labelled with (2-8).
    #[arg(long, default_value_t = 3)]
    pub band: u16,
    /// Spatial correlation length in pixels.
    #[arg(long, default_value_t = 3.0)]
    pub spatial_sigma: f64,
    /// Weight of the field shared by all channels.
    #[arg(long, default_value_t = 0.6)]
    pub channel_mix: f64,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Args, Debug)]
pub struct PrepareArgs {
    /// Input cubes (HSC1 files).
    #[arg(long = "input", required = true, num_args = 1..)]
    pub inputs: Vec<PathBuf>,
    #[arg(long)]
    pub band: u16,
    #[arg(long, default_value_t = 4)]
    pub scale: usize,
    /// Tile height; defaults to the band's nominal tile.
    #[arg(long)]
    pub tile_h: Option<usize>,
    #[arg(long)]
    pub tile_w: Option<usize>,
    #[arg(long, default_value_t = 64)]
    pub patch_size: usize,
    #[arg(long, default_value_t = 32)]
    pub patch_stride: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Dataset directory to create.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[arg(long)]
    pub band: u16,
    /// Training configuration (JSON).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Dataset directory written by `prepare`.
    #[arg(long)]
    pub dataset: PathBuf,
    /// Output directory for checkpoints, history and run summary.
    #[arg(long)]
    pub out: PathBuf,
    /// Continue from the last checkpoint in the output directory.
    #[arg(long)]
    pub resume: bool,
}

#[derive(Args, Debug)]
pub struct SrArgs {
    #[arg(long)]
    pub weights: PathBuf,
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[arg(long = "ref")]
    pub reference: PathBuf,
    /// Reconstruction to score, as LABEL=PATH (repeatable).
    #[arg(long = "test", required = true)]
    pub tests: Vec<String>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct GradcheckArgs {
    #[arg(long, default_value_t = 3)]
    pub channels: usize,
    /// LR input size.
    #[arg(long, default_value_t = 8)]
    pub size: usize,
    /// Check the full five-module network instead of the small one.
    #[arg(long)]
    pub full: bool,
    /// Number of seeds, starting at --seed.
    #[arg(long, default_value_t = 10)]
    pub seeds: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-4)]
    pub tolerance: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub step: f64,
}

#[derive(Args, Debug)]
pub struct ParamsArgs {
    #[arg(long)]
    pub channels: usize,
    #[arg(long, default_value_t = 5)]
    pub modules: usize,
    #[arg(long, default_value_t = 3)]
    pub pointwise_per_module: usize,
    #[arg(long, default_value_t = 5)]
    pub kernel: usize,
    /// All modules share one set of weights.
    #[arg(long)]
    pub shared: bool,
}

/// Error raised for bad flags or configuration; maps to exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn exit_code(err: &anyhow::Error) -> u8 {
    if commands::is_gradcheck_failure(err) {
        return 4;
    }
    for cause in err.chain() {
        if cause.downcast_ref::<UsageError>().is_some() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<dscr_core::Error>() {
            return match e.kind() {
                ErrorKind::Usage => 2,
                ErrorKind::Data => 3,
                ErrorKind::Numeric => 4,
            };
        }
    }
    3
}

/// Joins the cause chain, dropping causes already quoted by their parent.
fn render(err: &anyhow::Error) -> String {
    let mut out = String::new();
    let mut prev = String::new();
    for cause in err.chain() {
        let msg = cause.to_string();
        if !prev.ends_with(&msg) {
            if !out.is_empty() {
                out.push_str(": ");
            }
            out.push_str(&msg);
        }
        prev = msg;
    }
    out
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            log::warn!("could not size the thread pool: {e}");
        }
    }

    let result = match cli.command {
        Command::Synth(a) => commands::synth(&a),
        Command::Prepare(a) => commands::prepare(&a),
        Command::Train(a) => commands::train(&a),
        Command::Sr(a) => commands::sr(&a),
        Command::Eval(a) => commands::eval(&a),
        Command::Gradcheck(a) => commands::gradcheck(&a),
        Command::Params(a) => commands::params(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", render(&e));
            ExitCode::from(exit_code(&e))
        }
    }
}
