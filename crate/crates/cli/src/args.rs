use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub const SEED_ENV: &str = "CREASE_SEED";

#[derive(Debug, Parser)]
#[command(
    name = "crease",
    version,
    about = "Synthetic forehead-crease prompts: generation, edge extraction, augmentation and evaluation",
    args_override_self = true,
    after_help = "Exit codes: 0 success, 1 validation error, 2 runtime failure.\nCREASE_SEED, when set, overrides --seed."
)]
pub struct Cli {
    /// Worker threads [default: available cores]
    #[arg(long, global = true, value_name = "N")]
    pub jobs: Option<usize>,

    /// TOML or JSON file whose keys supply flags of the chosen subcommand; explicit flags win
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Minimum level of the JSON log lines written to stderr
    #[arg(long, global = true, value_name = "LEVEL", default_value = "info")]
    pub log_level: log::LevelFilter,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build an FC, CPD or VPD prompt dataset with a manifest
    Generate(GenerateArgs),
    /// Extract binary edge maps from every PNG in a directory
    Edges(EdgesArgs),
    /// Apply the augmentation registry to every binary PNG in a directory
    Augment(AugmentArgs),
    /// Evaluation metrics
    #[command(subcommand)]
    Metrics(MetricsCommand),
    /// Monte Carlo self-check of the Brownian-bridge forward process
    BridgeCheck(BridgeArgs),
    /// Re-hash every file listed in a dataset manifest
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    Fc,
    Cpd,
    Vpd,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct GenerateArgs {
    /// Mated-sample strategy
    #[arg(long, value_enum)]
    pub variant: VariantArg,
    /// Number of identities
    #[arg(long, value_name = "N")]
    pub ids: usize,
    /// Global seed
    #[arg(long, value_name = "S")]
    pub seed: Option<u64>,
    /// Output directory
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    /// Canvas size in pixels
    #[arg(long, value_name = "WxH", default_value = "256x256")]
    pub canvas: String,
    /// Stroke thickness in pixels
    #[arg(long, value_name = "K", default_value_t = 3)]
    pub thickness: u32,
    /// Canvas margin in pixels
    #[arg(long, value_name = "PX", default_value_t = 8)]
    pub margin: usize,
    /// CPD guide-point jitter in grid units
    #[arg(long, value_name = "X", default_value_t = crease_core::dataset::DEFAULT_CPD_MAGNITUDE)]
    pub cpd_magnitude: f64,
    /// Dataset name recorded in the manifest
    #[arg(long)]
    pub name: Option<String>,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct EdgesArgs {
    /// Input directory of grayscale PNGs
    #[arg(long = "in", value_name = "DIR")]
    pub input: PathBuf,
    /// Output directory
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    /// Gaussian blur kernel size (odd)
    #[arg(long, default_value_t = 15)]
    pub blur_kernel: usize,
    /// Gaussian blur sigma
    #[arg(long, default_value_t = 30.0)]
    pub blur_sigma: f64,
    /// Dilation kernel size (odd)
    #[arg(long, default_value_t = 3)]
    pub dilate_kernel: usize,
    /// Dilation iterations
    #[arg(long, default_value_t = 1)]
    pub dilate_iters: usize,
    /// Self-quotient denominator offset
    #[arg(long, default_value_t = 1.0)]
    pub epsilon: f64,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct AugmentArgs {
    /// Input directory of binary PNG prompts
    #[arg(long = "in", value_name = "DIR")]
    pub input: PathBuf,
    /// Output directory
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    /// Global seed
    #[arg(long, value_name = "S")]
    pub seed: Option<u64>,
    /// Comma-separated subset of registry names
    #[arg(long, value_name = "NAME,...", value_delimiter = ',')]
    pub only: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum MetricsCommand {
    /// SSIM of two images, or the first-pose protocol over a dataset
    Ssim(SsimArgs),
    /// Intra-subject diversity from a feature CSV or a dataset
    Diversity(DiversityArgs),
    /// Frechet distance between two feature sets or two statistics files
    Fid(FidArgs),
    /// Equal error rate
    Eer(ScoresArgs),
    /// True-match rate at fixed false-match rates
    Tmr(TmrArgs),
    /// Detection error tradeoff curve as fmr,fnmr CSV
    Det(DetArgs),
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct SsimArgs {
    /// First image
    #[arg(long, value_name = "PNG", requires = "b", conflicts_with = "manifest")]
    pub a: Option<PathBuf>,
    /// Second image
    #[arg(long, value_name = "PNG", requires = "a")]
    pub b: Option<PathBuf>,
    /// Dataset manifest
    #[arg(long, value_name = "PATH", required_unless_present = "a")]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct DiversityArgs {
    /// Feature CSV with header id,f0,...
    #[arg(
        long,
        value_name = "CSV",
        conflicts_with = "manifest",
        required_unless_present = "manifest"
    )]
    pub features: Option<PathBuf>,
    /// Dataset manifest; images become block-mean pixel features
    #[arg(long, value_name = "PATH")]
    pub manifest: Option<PathBuf>,
    /// Block size for pixel features (1 = raw pixels)
    #[arg(long, value_name = "N", default_value_t = 8)]
    pub pool: usize,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct FidArgs {
    /// First feature CSV
    #[arg(long, value_name = "CSV", requires = "features_b", conflicts_with_all = ["stats_a", "stats_b"])]
    pub features_a: Option<PathBuf>,
    /// Second feature CSV
    #[arg(long, value_name = "CSV", requires = "features_a")]
    pub features_b: Option<PathBuf>,
    /// First statistics JSON {mean, cov, n}
    #[arg(
        long,
        value_name = "JSON",
        requires = "stats_b",
        required_unless_present = "features_a"
    )]
    pub stats_a: Option<PathBuf>,
    /// Second statistics JSON {mean, cov, n}
    #[arg(long, value_name = "JSON", requires = "stats_a")]
    pub stats_b: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct ScoresArgs {
    /// Score CSV with header label,score
    #[arg(long, value_name = "CSV")]
    pub scores: PathBuf,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct TmrArgs {
    /// Score CSV with header label,score
    #[arg(long, value_name = "CSV")]
    pub scores: PathBuf,
    /// Comma-separated false-match-rate targets
    #[arg(
        long,
        value_name = "R,...",
        value_delimiter = ',',
        default_value = "0.001,0.0001"
    )]
    pub fmr: Vec<f64>,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct DetArgs {
    /// Score CSV with header label,score
    #[arg(long, value_name = "CSV")]
    pub scores: PathBuf,
    /// Maximum number of curve points
    #[arg(long, value_name = "N", default_value_t = 200)]
    pub points: usize,
    /// Output CSV [default: stdout]
    #[arg(long, value_name = "CSV")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct BridgeArgs {
    /// Number of diffusion steps
    #[arg(long = "T", value_name = "T", default_value_t = 1000)]
    pub max_step: u32,
    /// Monte Carlo draws per moment check
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    /// Seed
    #[arg(long, value_name = "S")]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct VerifyArgs {
    /// Dataset manifest
    #[arg(long, value_name = "PATH")]
    pub manifest: PathBuf,
}
