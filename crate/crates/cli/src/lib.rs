//! `vidsum` — command-line front end for the frame-level summarizer.
//!
//! One subcommand per workflow stage: synthesize a corpus, train on a
//! manifest, score feature files with a checkpoint, evaluate against
//! annotations, audit gradients by finite differences, and render a
//! per-frame score plot.

mod commands;
pub mod config;
pub mod output;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use vidsum_core::training::AdversaryMode;
use vidsum_core::{ErrorKind, Result};

#[derive(Debug, Parser)]
#[command(name = "vidsum", version, about = "Frame-level video summarization")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic corpus with planted summary structure.
    Synth(SynthArgs),
    /// Train on a dataset manifest and write metrics plus checkpoints.
    Train(TrainArgs),
    /// Score frames with a trained checkpoint.
    Infer(InferArgs),
    /// Evaluate a checkpoint against annotated ground truth.
    Eval(EvalArgs),
    /// Check every analytic gradient against central differences.
    Gradcheck(GradcheckArgs),
    /// Render scores and the selected keyshots as an SVG.
    Visualize(VisualizeArgs),
}

/// Training opponents; mirrors the library's adversary modes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    ThreePlayer,
    TwoPlayer,
    GeneratorOnly,
}

impl From<ModeArg> for AdversaryMode {
    fn from(mode: ModeArg) -> AdversaryMode {
        match mode {
            ModeArg::ThreePlayer => AdversaryMode::ThreePlayer,
            ModeArg::TwoPlayer => AdversaryMode::TwoPlayer,
            ModeArg::GeneratorOnly => AdversaryMode::GeneratorOnly,
        }
    }
}

/// Which side of a recorded split to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SplitArg {
    Train,
    Test,
    All,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Corpus directory to create.
    #[arg(long)]
    pub out: PathBuf,
    /// Partial spec document (TOML); flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub videos: Option<usize>,
    /// Shortest video to draw.
    #[arg(long)]
    pub min_frames: Option<usize>,
    /// Longest video to draw.
    #[arg(long)]
    pub max_frames: Option<usize>,
    /// Feature dimensionality.
    #[arg(long)]
    pub dim: Option<usize>,
    /// Blocks per video.
    #[arg(long)]
    pub segments: Option<usize>,
    /// Fraction of blocks that carry keyframes.
    #[arg(long)]
    pub keyframe_density: Option<f64>,
    /// Minimum distance between block means.
    #[arg(long)]
    pub separation: Option<f64>,
    /// Per-coordinate noise scale.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Fraction of frames covered by key blocks.
    #[arg(long)]
    pub key_coverage: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Dataset manifest (TOML).
    #[arg(long)]
    pub data: PathBuf,
    /// Output directory for config, metrics, split, and checkpoints.
    #[arg(long)]
    pub out: PathBuf,
    /// Partial training config (TOML); flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Opponent setup.
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Drop the supervised score loss from the summarizer objective.
    #[arg(long)]
    pub no_supervised: bool,
    /// Comma-separated hole sizes for the temporal layers, e.g. 1,4,16,64.
    #[arg(long, value_delimiter = ',')]
    pub holes: Option<Vec<usize>>,
    #[arg(long)]
    pub lstm_hidden: Option<usize>,
    #[arg(long)]
    pub enc_dim: Option<usize>,
    #[arg(long)]
    pub disc_hidden: Option<usize>,
    /// Dropout rate on the score head input.
    #[arg(long)]
    pub dropout: Option<f64>,
    /// Skip the per-layer normalization in the temporal network.
    #[arg(long)]
    pub bypass_norm: bool,
    #[arg(long)]
    pub lr_g: Option<f64>,
    #[arg(long)]
    pub lr_d: Option<f64>,
    /// Balance between the generated and random fake pairs.
    #[arg(long)]
    pub tau: Option<f64>,
    /// Frames per training clip.
    #[arg(long)]
    pub shot_len: Option<usize>,
    /// Overlap fraction between consecutive clips.
    #[arg(long)]
    pub shot_overlap: Option<f64>,
    /// Summarizer updates per iteration.
    #[arg(long)]
    pub g_steps: Option<usize>,
    /// Critic updates per iteration.
    #[arg(long)]
    pub d_steps: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Evaluate every this many epochs; 0 = only at the end.
    #[arg(long)]
    pub eval_every: Option<usize>,
    /// Fraction of videos assigned to the train split.
    #[arg(long)]
    pub train_fraction: Option<f64>,
    /// Stop once the train-split mean F reaches this.
    #[arg(long)]
    pub target_train_f: Option<f64>,
    /// Global-norm gradient cap.
    #[arg(long)]
    pub clip_norm: Option<f64>,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("input").required(true).multiple(false))]
pub struct InferArgs {
    /// Checkpoint to score with.
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// One feature file; writes a single CSV to --out.
    #[arg(long, group = "input")]
    pub features: Option<PathBuf>,
    /// Dataset manifest; writes one CSV per video into the --out directory.
    #[arg(long, group = "input")]
    pub data: Option<PathBuf>,
    /// CSV file (with --features) or directory (with --data).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Checkpoint to evaluate.
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Dataset manifest (TOML).
    #[arg(long)]
    pub data: PathBuf,
    /// Report CSV to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Which videos to score. `train`/`test` need a recorded split.
    #[arg(long, value_enum, default_value = "all")]
    pub split: SplitArg,
    /// Split assignment written by `train` (defaults to the manifest's).
    #[arg(long)]
    pub split_file: Option<PathBuf>,
    /// Summary budget as a fraction of the video length.
    #[arg(long)]
    pub budget: Option<f64>,
    /// Keyframes a segment needs to count as ground truth.
    #[arg(long)]
    pub min_keyframes: Option<usize>,
    /// Upper bound on segments per video.
    #[arg(long)]
    pub max_segments: Option<usize>,
    /// Segmentation penalty weight.
    #[arg(long)]
    pub lambda: Option<f64>,
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    /// Clip length for the audit.
    #[arg(long, default_value_t = 6)]
    pub frames: usize,
    /// Feature dimensionality for the audit.
    #[arg(long, default_value_t = 4)]
    pub dim: usize,
    #[arg(long, default_value_t = 0.5)]
    pub tau: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Maximum relative error accepted per parameter.
    #[arg(long, default_value_t = 1e-4)]
    pub tolerance: f64,
    /// Central-difference step.
    #[arg(long, default_value_t = 1e-5)]
    pub step: f64,
}

#[derive(Debug, Args)]
pub struct VisualizeArgs {
    /// Checkpoint to score with.
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Feature file to visualize.
    #[arg(long)]
    pub features: PathBuf,
    /// Annotation document; adds keyframe ticks when given.
    #[arg(long)]
    pub annotations: Option<PathBuf>,
    /// SVG file to write; the score table lands next to it as CSV.
    #[arg(long)]
    pub out: PathBuf,
    /// Upper bound on segments.
    #[arg(long)]
    pub max_segments: Option<usize>,
    /// Segmentation penalty weight.
    #[arg(long)]
    pub lambda: Option<f64>,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth(args) => commands::synth(&args),
        Command::Train(args) => commands::train(&args),
        Command::Infer(args) => commands::infer(&args),
        Command::Eval(args) => commands::eval(&args),
        Command::Gradcheck(args) => commands::gradcheck(&args),
        Command::Visualize(args) => commands::visualize(&args),
    }
}

/// Process exit code for an error class: validation 1, numerical 2, I/O 3.
pub fn exit_code(kind: ErrorKind) -> u8 {
    match kind {
        ErrorKind::Validation => 1,
        ErrorKind::Numerical => 2,
        ErrorKind::Io => 3,
    }
}
