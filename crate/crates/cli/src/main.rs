//! `cordseg`: synthesize data, train, predict full frames, evaluate, and
//! self-check gradients.
//!
//! Logs go to standard error; machine-readable results to standard output.
//! Exit codes: 0 success, 1 check failure, 2 usage or input error,
//! 3 numeric error.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "cordseg", version, about = "Tiled U-Net segmentation of grayscale microscopy frames")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic paired dataset (`images/` + `masks/`).
    Synth(SynthArgs),
    /// Train a U-Net on a paired dataset; writes a checkpoint and a history CSV.
    Train(TrainArgs),
    /// Segment a full frame tile by tile and write the stitched mask.
    Predict(PredictArgs),
    /// Score a checkpoint on a paired dataset.
    Eval(EvalArgs),
    /// Compare analytic and finite-difference gradients of a small U-Net.
    Gradcheck(GradcheckArgs),
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// Output dataset directory.
    #[arg(long)]
    out: PathBuf,
    /// Number of image/mask pairs.
    #[arg(long, default_value_t = 150)]
    count: usize,
    /// Side length of each square sample in pixels (>= 32).
    #[arg(long, default_value_t = 256)]
    size: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

#[derive(Debug, Args)]
struct ModelArgs {
    /// Number of down-sampling stages.
    #[arg(long, default_value_t = 4)]
    depth: usize,
    /// Channels of the first encoder block.
    #[arg(long = "base-channels", default_value_t = 64)]
    base_channels: usize,
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// Dataset directory with `images/` and `masks/`.
    #[arg(long)]
    data: PathBuf,
    /// Checkpoint path; the history CSV is written next to it as
    /// `<stem>.history.csv`.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 50)]
    epochs: usize,
    /// Adam learning rate.
    #[arg(long, default_value_t = 0.001)]
    lr: f64,
    /// Mini-batch size.
    #[arg(long, default_value_t = 4)]
    batch: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Fraction of samples used for training; the rest is the test set.
    #[arg(long, default_value_t = 0.8)]
    split: f64,
    /// Random dihedral augmentation of training tiles (default).
    #[arg(long, overrides_with = "no_augment")]
    augment: bool,
    /// Disable augmentation.
    #[arg(long = "no-augment", overrides_with = "augment")]
    no_augment: bool,
    /// Probability threshold for the per-epoch test evaluation.
    #[arg(long, default_value_t = 0.5)]
    threshold: f32,
    /// Worker threads (default: available cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Debug, Args)]
struct PredictArgs {
    /// Checkpoint produced by `train`.
    #[arg(long)]
    model: PathBuf,
    /// Input frame (PGM or 8-bit grayscale PNG).
    #[arg(long)]
    image: PathBuf,
    /// Output mask (PGM, values 0/255).
    #[arg(long)]
    out: PathBuf,
    /// Tile side in pixels; must be divisible by 2^depth.
    #[arg(long, default_value_t = 256)]
    tile: usize,
    #[arg(long, default_value_t = 0.5)]
    threshold: f32,
    /// Worker threads (default: available cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    threshold: f32,
    /// Evaluate only the test partition of this train/test split (same
    /// seeded shuffle as `train`); by default every sample is scored.
    #[arg(long)]
    split: Option<f64>,
    /// Seed for `--split`.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Worker threads (default: available cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Debug, Args)]
struct GradcheckArgs {
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Initial central-difference step.
    #[arg(long, default_value_t = cordseg_core::gradcheck::DEFAULT_STEP)]
    step: f64,
    /// Maximum accepted relative error.
    #[arg(long, default_value_t = 1e-3)]
    tolerance: f64,
    /// Negate one analytic gradient entry (negative control).
    #[arg(long, hide = true)]
    sabotage: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    commands::run(cli.command)
}
