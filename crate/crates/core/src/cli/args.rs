use std::path::PathBuf;

use clap::{ArgAction, Args, Parser, Subcommand};

use crate::heatmap::ResampleMode;
use crate::mil::ModelKind;

#[derive(Debug, Parser)]
#[command(name = "pathomil", version, about = "Attention-MIL toolkit for slide-level risk classification")]
#[command(args_override_self = true)]
pub struct Cli {
    /// TOML file of flag defaults; top-level keys apply to any subcommand
    /// that has the flag, `[subcommand]` tables to that subcommand only.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tissue mask and overlay for a slide raster.
    Segment(SegmentArgs),
    /// Patch grid from a mask, featurized into a BAG1 file.
    Patch(PatchArgs),
    /// Synthetic feature bags, manifest and signal flags.
    Synth(SynthArgs),
    /// Synthetic slide raster with its ground-truth tissue mask.
    SynthSlide(SynthSlideArgs),
    /// Train one model on train/val manifest entries.
    Train(TrainArgs),
    /// Stratified k-fold cross-validation.
    Cv(CvArgs),
    /// Metrics of a trained model on test entries.
    Eval(EvalArgs),
    /// Attention heatmap overlay for one bag.
    Heatmap(HeatmapArgs),
    /// Boosted trees over enhanced features from a trained MIL model.
    GbdtTrain(GbdtTrainArgs),
    /// Metrics of a boosted-tree ensemble on test entries.
    GbdtEval(GbdtEvalArgs),
}

#[derive(Debug, Args)]
pub struct SeedArg {
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct SegmentArgs {
    #[arg(long)]
    pub slide: PathBuf,
    #[arg(long)]
    pub out_mask: PathBuf,
    #[arg(long)]
    pub out_overlay: Option<PathBuf>,
    #[arg(long, default_value_t = 32.0)]
    pub target_downsample: f64,
    #[arg(long, default_value_t = 2.0)]
    pub blur_sigma: f64,
    #[arg(long, default_value_t = 5)]
    pub close_kernel: usize,
    #[arg(long, default_value_t = 3)]
    pub open_kernel: usize,
    #[arg(long, default_value_t = 500)]
    pub min_area: usize,
    #[arg(long, default_value_t = 20)]
    pub min_tissue_saturation: u8,
    #[arg(long, default_value_t = 8)]
    pub max_levels: usize,
    #[arg(long, default_value_t = 0.4)]
    pub alpha: f64,
    #[command(flatten)]
    pub seed: SeedArg,
}

#[derive(Debug, Args)]
pub struct PatchArgs {
    #[arg(long)]
    pub slide: PathBuf,
    #[arg(long)]
    pub mask: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub slide_id: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub label: u8,
    #[arg(long, default_value_t = 256)]
    pub patch_size: usize,
    #[arg(long, default_value_t = 0.5)]
    pub coverage: f64,
    #[arg(long, default_value_t = 8)]
    pub max_levels: usize,
    /// Take features for the grid coordinates from this BAG1 instead of computing them.
    #[arg(long)]
    pub features_from: Option<PathBuf>,
    /// Also write the grid as `x y` lines.
    #[arg(long)]
    pub coords_out: Option<PathBuf>,
    #[command(flatten)]
    pub seed: SeedArg,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    /// Bags per class (low,medium,high).
    #[arg(long, value_delimiter = ',', action = ArgAction::Set, default_values_t = [105, 21, 84])]
    pub bags_per_class: Vec<usize>,
    #[arg(long, default_value_t = 64)]
    pub feature_dim: usize,
    #[arg(long, default_value_t = 50)]
    pub min_instances: usize,
    #[arg(long, default_value_t = 200)]
    pub max_instances: usize,
    #[arg(long, default_value_t = 0.2)]
    pub signal_fraction: f64,
    #[arg(long, default_value_t = 1.0)]
    pub noise_sigma: f64,
    #[arg(long, default_value_t = 0.0)]
    pub test_fraction: f64,
    #[command(flatten)]
    pub seed: SeedArg,
}

#[derive(Debug, Args)]
pub struct SynthSlideArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub truth_out: Option<PathBuf>,
    #[arg(long, default_value_t = 8192)]
    pub width: usize,
    #[arg(long, default_value_t = 6144)]
    pub height: usize,
    #[command(flatten)]
    pub seed: SeedArg,
}

/// Optimizer and model flags; unset values fall back to the model's defaults.
#[derive(Debug, Args)]
pub struct TrainFlags {
    #[arg(long, default_value = "clam-sb")]
    pub model: ModelKind,
    /// [default: 3e-5 for clam-sb, 4e-4 for abmil]
    #[arg(long)]
    pub lr: Option<f64>,
    /// [default: 1e-4]
    #[arg(long)]
    pub reg: Option<f64>,
    /// [default: 0.4]
    #[arg(long)]
    pub dropout: Option<f64>,
    /// [default: 100 for clam-sb, 20 for abmil]
    #[arg(long)]
    pub max_epochs: Option<usize>,
    /// [default: 5 for clam-sb, 0 for abmil]
    #[arg(long)]
    pub warmup_epochs: Option<usize>,
    /// [default: 0.5]
    #[arg(long)]
    pub bag_weight: Option<f64>,
    /// Instances pseudo-labelled at each end of the attention ranking [default: 8]
    #[arg(long = "b")]
    pub b: Option<usize>,
    /// [default: 20 for clam-sb, 5 for abmil]
    #[arg(long)]
    pub patience: Option<usize>,
    #[arg(long, default_value_t = false)]
    pub standardize: bool,
    #[command(flatten)]
    pub seed: SeedArg,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub history: Option<PathBuf>,
    #[command(flatten)]
    pub train: TrainFlags,
}

#[derive(Debug, Args)]
pub struct CvArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Report path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Directory for per-fold history CSVs.
    #[arg(long)]
    pub history_dir: Option<PathBuf>,
    #[command(flatten)]
    pub train: TrainFlags,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub seed: SeedArg,
}

#[derive(Debug, Args)]
pub struct HeatmapArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub bag: PathBuf,
    #[arg(long)]
    pub slide: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub heat_out: Option<PathBuf>,
    /// Text file with the score range and render level.
    #[arg(long)]
    pub side_out: Option<PathBuf>,
    /// gaussian (CLAM default) or bilinear (ABMIL default).
    #[arg(long)]
    pub mode: Option<ResampleMode>,
    #[arg(long, default_value_t = 0.4)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    /// ABMIL class row; the predicted class when absent.
    #[arg(long)]
    pub class: Option<usize>,
    #[arg(long, default_value_t = 256)]
    pub patch_size: usize,
    #[arg(long, default_value_t = 8)]
    pub max_levels: usize,
    #[command(flatten)]
    pub seed: SeedArg,
}

#[derive(Debug, Args)]
pub struct GbdtTrainArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 200)]
    pub rounds: usize,
    #[arg(long, default_value_t = 0.1)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = 6)]
    pub max_depth: usize,
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = 0.0)]
    pub gamma: f64,
    #[arg(long, default_value_t = 1.0)]
    pub min_child_hessian: f64,
    /// Append the MIL bag embedding to the 23 enhanced features.
    #[arg(long, default_value_t = false)]
    pub concat_embedding: bool,
    #[command(flatten)]
    pub seed: SeedArg,
}

#[derive(Debug, Args)]
pub struct GbdtEvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub gbdt: PathBuf,
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub seed: SeedArg,
}
