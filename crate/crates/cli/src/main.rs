//! `weldmat`: boundary heatmaps, loss evaluation, matting refinement,
//! trimaps, IoU evaluation, augmentation and synthetic data.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use weldmat_core::heatmap::{DEFAULT_EDGE_THRESHOLD, DEFAULT_SIGMA};
use weldmat_core::loss::LossParams;
use weldmat_core::matting::MattingParams;
use weldmat_core::metrics::Aggregate;
use weldmat_core::refine::{DEFAULT_C_HIGH, DEFAULT_C_LOW, DEFAULT_MASK_THRESHOLD};
use weldmat_core::synth::SynthParams;

#[derive(Debug, Parser)]
#[command(
    name = "weldmat",
    version,
    about = "Weld-mask boundary heatmaps and matting refinement"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Gaussian boundary heatmap from a binary mask.
    HeatmapGt(HeatmapArgs),
    /// Combined focal + boundary loss with gradients.
    Loss(LossArgs),
    /// Refine a probability map into a mask by trimap-constrained matting.
    Refine(RefineArgs),
    /// Three-level trimap from a probability map.
    Trimap(TrimapArgs),
    /// IoU / mean-IoU of predicted masks against ground truth.
    Eval(EvalArgs),
    /// Apply a seeded augmentation pipeline to an image and its mask.
    Augment(AugmentArgs),
    /// Generate synthetic image / mask / probability triples.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct HeatmapArgs {
    /// Binary mask (PNG, PGM or WFR; values exactly 0/1 or 0/255).
    #[arg(long)]
    pub mask: PathBuf,
    /// Output heatmap; format follows the extension (.wfr recommended).
    #[arg(long)]
    pub out: PathBuf,
    /// Optional 8-bit PNG/PGM preview of the heatmap.
    #[arg(long)]
    pub preview: Option<PathBuf>,
    /// Gaussian width in pixels; support is cut at 3 sigma.
    #[arg(long, default_value_t = DEFAULT_SIGMA)]
    pub sigma: f64,
    /// Laplacian response above which a pixel counts as boundary.
    #[arg(long, default_value_t = DEFAULT_EDGE_THRESHOLD)]
    pub edge_threshold: f64,
}

#[derive(Debug, Args)]
pub struct LossArgs {
    /// Segmentation probabilities.
    #[arg(long)]
    pub ps: PathBuf,
    /// Segmentation ground-truth mask.
    #[arg(long)]
    pub gs: PathBuf,
    /// Predicted boundary heatmap.
    #[arg(long)]
    pub pb: PathBuf,
    /// Ground-truth boundary heatmap.
    #[arg(long)]
    pub hb: PathBuf,
    #[arg(long, default_value_t = LossParams::default().w1)]
    pub w1: f64,
    #[arg(long, default_value_t = LossParams::default().w2)]
    pub w2: f64,
    #[arg(long, default_value_t = LossParams::default().alpha_t)]
    pub alpha_t: f64,
    #[arg(long, default_value_t = LossParams::default().gamma)]
    pub gamma: f64,
    /// Write d(combined)/d(ps) here (WFR).
    #[arg(long)]
    pub grad_ps_out: Option<PathBuf>,
    /// Write d(combined)/d(pb) here (WFR).
    #[arg(long)]
    pub grad_pb_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ThresholdArgs {
    /// Probabilities at or above this are definite foreground.
    #[arg(long, default_value_t = DEFAULT_C_HIGH)]
    pub c_high: f64,
    /// Probabilities at or below this are definite background.
    #[arg(long, default_value_t = DEFAULT_C_LOW)]
    pub c_low: f64,
    /// Grow the unknown band by this many pixels (Chebyshev radius).
    #[arg(long = "sigma-band", default_value_t = 0)]
    pub band: usize,
}

#[derive(Debug, Args)]
pub struct RefineArgs {
    /// Gray or RGB image in [0, 1].
    #[arg(long)]
    pub image: PathBuf,
    /// Single-channel probability map in [0, 1].
    #[arg(long)]
    pub prob: PathBuf,
    /// Output binary mask.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub trimap_out: Option<PathBuf>,
    /// Raw (unclamped) alpha matte; use .wfr to keep full precision.
    #[arg(long)]
    pub alpha_out: Option<PathBuf>,
    #[command(flatten)]
    pub thresholds: ThresholdArgs,
    /// Matting regulariser.
    #[arg(long, default_value_t = MattingParams::default().epsilon)]
    pub epsilon: f64,
    /// Relative residual at which the solver stops.
    #[arg(long, default_value_t = MattingParams::default().solver_tol)]
    pub solver_tol: f64,
    #[arg(long, default_value_t = MattingParams::default().max_iters)]
    pub max_iters: usize,
    /// Alpha strictly above this becomes foreground.
    #[arg(long, default_value_t = DEFAULT_MASK_THRESHOLD)]
    pub mask_threshold: f64,
    /// Print wall time and unknown-set size.
    #[arg(long)]
    pub bench: bool,
    /// Print a JSON summary on stdout.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct TrimapArgs {
    #[arg(long)]
    pub prob: PathBuf,
    /// Output trimap (gray 0/128/255, or 0/0.5/1 in WFR).
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub thresholds: ThresholdArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum AggregateArg {
    Macro,
    Global,
}

impl From<AggregateArg> for Aggregate {
    fn from(a: AggregateArg) -> Self {
        match a {
            AggregateArg::Macro => Aggregate::Macro,
            AggregateArg::Global => Aggregate::Global,
        }
    }
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Directory of predicted masks.
    #[arg(long)]
    pub pred_dir: PathBuf,
    /// Directory of ground-truth masks, matched to predictions by file stem.
    #[arg(long)]
    pub gt_dir: PathBuf,
    /// JSON report destination.
    #[arg(long)]
    pub report: PathBuf,
    #[arg(long, value_enum, default_value_t = AggregateArg::Macro)]
    pub aggregate: AggregateArg,
    /// Also print the report on stdout.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct AugmentArgs {
    #[arg(long)]
    pub image: PathBuf,
    #[arg(long)]
    pub mask: PathBuf,
    /// Overrides the seed in the config file.
    #[arg(long)]
    pub seed: Option<u64>,
    /// JSON pipeline description; the built-in pipeline when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub count: u64,
    /// Side length in pixels (at least 16).
    #[arg(long, default_value_t = 128)]
    pub size: usize,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Blur applied to the ground truth to form the probability map.
    #[arg(long, default_value_t = SynthParams::default().blur_sigma)]
    pub blur_sigma: f64,
    #[arg(long, default_value_t = SynthParams::default().prob_noise)]
    pub prob_noise: f64,
    /// Peak value of the probability map.
    #[arg(long, default_value_t = SynthParams::default().confidence)]
    pub confidence: f64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::HeatmapGt(a) => commands::heatmap_gt(a),
        Command::Loss(a) => commands::loss(a),
        Command::Refine(a) => commands::refine(a),
        Command::Trimap(a) => commands::trimap(a),
        Command::Eval(a) => commands::eval(a),
        Command::Augment(a) => commands::augment(a),
        Command::Synth(a) => commands::synth(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_computational() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
