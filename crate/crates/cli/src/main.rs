use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use collage_core::geometry::AspectRatio;
use collage_core::harness::Method;
use collage_core::CollageError;

mod commands;
mod manifest;

#[derive(Parser)]
#[command(name = "collage", version, about = "Aspect-ratio constrained photo collages")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML configuration file; unset keys keep their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides `train.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Extra `key=value` config overrides, e.g. `env.max_step=8`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Build one collage from a directory of photos.
    Generate {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_parser = parse_aspect)]
        aspect: AspectRatio,
        #[arg(long)]
        out: PathBuf,
        /// Trained agent; without one the quick layout plus cropping is used.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Long side of the output image in pixels.
        #[arg(long, default_value_t = 1024)]
        size: u32,
        /// Photos are downsampled to this long side on load.
        #[arg(long, default_value_t = 512)]
        max_side: u32,
        #[command(flatten)]
        common: Common,
    },
    /// Train an agent on a directory of image-set subdirectories.
    Train {
        #[arg(long)]
        input: PathBuf,
        /// Output directory for checkpoints, logs and the manifest.
        #[arg(long)]
        out: PathBuf,
        /// Resume from this checkpoint.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        max_epoch: Option<u32>,
        #[arg(long, default_value_t = 256)]
        max_side: u32,
        #[command(flatten)]
        common: Common,
    },
    /// Compare methods on a directory of image-set subdirectories.
    Evaluate {
        #[arg(long)]
        input: PathBuf,
        /// Output CSV table.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Defaults to `baseline`, plus every agent variant when a
        /// checkpoint is given.
        #[arg(long, value_delimiter = ',', value_parser = parse_method)]
        methods: Vec<Method>,
        #[arg(long, default_value_t = 256)]
        max_side: u32,
        #[command(flatten)]
        common: Common,
    },
    /// Write synthetic image sets, one subdirectory each.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 20)]
        sets: usize,
        /// Set sizes, cycled.
        #[arg(long, value_delimiter = ',', default_value = "6,8,12")]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn parse_aspect(s: &str) -> Result<AspectRatio, String> {
    s.parse::<AspectRatio>().map_err(|e| e.to_string())
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse::<Method>().map_err(|e| e.to_string())
}

fn exit_code(e: &CollageError) -> u8 {
    match e {
        CollageError::Io(_) | CollageError::Image(_) | CollageError::Checkpoint(_) => 3,
        CollageError::Numeric(_) | CollageError::EmptyContent => 4,
        _ => 2,
    }
}

fn configure_threads() {
    let Ok(v) = std::env::var("COLLAGE_RL_THREADS") else { return };
    match v.parse::<usize>() {
        Ok(n) if n > 0 => {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                log::warn!("could not size the thread pool: {e}");
            }
        }
        _ => log::warn!("ignoring COLLAGE_RL_THREADS={v}"),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    configure_threads();
    let result = match cli.command {
        Command::Generate { input, aspect, out, checkpoint, size, max_side, common } => {
            commands::generate(&input, aspect, &out, checkpoint.as_deref(), size, max_side, &common)
        }
        Command::Train { input, out, checkpoint, max_epoch, max_side, common } => {
            commands::train(&input, &out, checkpoint.as_deref(), max_epoch, max_side, &common)
        }
        Command::Evaluate { input, out, checkpoint, methods, max_side, common } => {
            commands::evaluate(&input, &out, checkpoint.as_deref(), methods, max_side, &common)
        }
        Command::Synth { out, sets, sizes, seed } => commands::synth(&out, sets, &sizes, seed),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
