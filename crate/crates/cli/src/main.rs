//! `latefuse`: command-line front end for pooling, evaluation, weighted late
//! fusion and KELM training.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgAction, Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "latefuse", version, about = "Score-level fusion toolkit for frame-wise emotion recognition")]
pub struct Cli {
    /// Worker threads for parallel stages (0 = all cores). Outputs do not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Window a frame-feature track and pool each window into mean and STD statistics.
    Pool(PoolArgs),
    /// Score predictions against ground-truth labels with the challenge measure.
    Evaluate(EvaluateArgs),
    /// Fit SWF or MCWF weights on a validation set by Dirichlet random search.
    FuseOptimize(FuseOptimizeArgs),
    /// Fuse score tracks with previously fitted weights.
    FuseApply(FuseApplyArgs),
    /// Train a kernel extreme learning machine on pooled segments.
    KelmTrain(KelmTrainArgs),
    /// Score pooled segments with a trained KELM and expand to frame rate.
    KelmPredict(KelmPredictArgs),
    /// Generate a synthetic labelled dataset with per-model reliabilities.
    Synth(SynthArgs),
}

#[derive(Args, Debug)]
pub struct PoolArgs {
    /// Feature CSV (`# video=.. rate_hz=.. dim=..`).
    #[arg(long)]
    pub features: PathBuf,
    /// Label CSV; resampled to the feature rate.
    #[arg(long)]
    pub labels: PathBuf,
    /// Window length in seconds.
    #[arg(long, default_value_t = 4.0)]
    pub length_s: f64,
    /// Fraction of a window shared with the next one, in [0, 1).
    #[arg(long, default_value_t = 0.0)]
    pub overlap_fraction: f64,
    /// Output pooled-segment CSV.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    /// Ground-truth label CSV.
    #[arg(long)]
    pub labels: PathBuf,
    /// Predicted labels in label-CSV format.
    #[arg(long, conflicts_with = "scores", required_unless_present = "scores")]
    pub predictions: Option<PathBuf>,
    /// Score CSV decoded by per-frame argmax.
    #[arg(long)]
    pub scores: Option<PathBuf>,
    /// Common timebase in Hz.
    #[arg(long, default_value_t = 5.0)]
    pub rate_hz: f64,
    /// Optional report JSON output.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct FuseOptimizeArgs {
    /// Validation label CSV.
    #[arg(long)]
    pub labels: PathBuf,
    /// Score CSV per model, in fusion order (repeat the flag).
    #[arg(long = "scores", required = true, num_args = 1..)]
    pub scores: Vec<PathBuf>,
    /// `swf` (one weight per model) or `mcwf` (one weight per model and class).
    #[arg(long, default_value = "swf")]
    pub mode: String,
    #[arg(long, default_value_t = 10_000)]
    pub num_draws: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Symmetric Dirichlet concentration.
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    /// Evaluate single-model corners and uniform weights before random draws.
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    pub seed_corners: bool,
    #[arg(long, default_value_t = 5.0)]
    pub rate_hz: f64,
    /// Output weights JSON.
    #[arg(long)]
    pub out: PathBuf,
    /// Optional `candidate_index,cpm` CSV.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Optional report JSON of the best candidate.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct FuseApplyArgs {
    /// Weights JSON written by `fuse-optimize`.
    #[arg(long)]
    pub weights: PathBuf,
    /// Score CSV per model, in the order recorded in the weights file.
    #[arg(long = "scores", required = true, num_args = 1..)]
    pub scores: Vec<PathBuf>,
    /// Label CSV; when given, the fused predictions are evaluated.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long, default_value_t = 5.0)]
    pub rate_hz: f64,
    /// Output fused score CSV.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct KelmTrainArgs {
    /// Pooled-segment CSV (repeat for several videos).
    #[arg(long = "pooled", required = true, num_args = 1..)]
    pub pooled: Vec<PathBuf>,
    /// `linear`, `poly` or `rbf`.
    #[arg(long, default_value = "poly")]
    pub kernel: String,
    #[arg(long, default_value_t = 0.1)]
    pub gamma: f64,
    #[arg(long, default_value_t = 3)]
    pub degree: u32,
    #[arg(long, default_value_t = 0.0)]
    pub coef0: f64,
    /// Regularization constant C.
    #[arg(long = "regularization-c", default_value_t = 3.0)]
    pub regularization_c: f64,
    /// Scale targets by logarithmic class weights with this `r`.
    #[arg(long)]
    pub log_weight_r: Option<f64>,
    /// Z-score features with training statistics.
    #[arg(long)]
    pub standardize: bool,
    /// Class-order file, one emotion name per line.
    #[arg(long)]
    pub class_map: Option<PathBuf>,
    /// Output model JSON.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct KelmPredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Pooled-segment CSV to score.
    #[arg(long)]
    pub pooled: PathBuf,
    /// Frame rate of the expanded score track.
    #[arg(long, default_value_t = 5.0)]
    pub rate_hz: f64,
    /// Frames in the output; defaults to covering the last window.
    #[arg(long)]
    pub total_frames: Option<usize>,
    #[arg(long, default_value = "kelm")]
    pub model_id: String,
    #[arg(long, default_value = "video")]
    pub video_id: String,
    /// Output score CSV at `rate_hz`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// Scenario JSON (seed, num_frames, class_priors, reliability, confidence_sharpness).
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    pub config: Option<PathBuf>,
    /// Built-in scenario: `complementary`.
    #[arg(long)]
    pub preset: Option<String>,
    /// Frames per class for the `complementary` preset.
    #[arg(long, default_value_t = 10)]
    pub frames_per_class: usize,
    /// Overrides the seed of the scenario JSON.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Directory receiving `labels.csv` and one CSV per model.
    #[arg(long)]
    pub out_dir: PathBuf,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
