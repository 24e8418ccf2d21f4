use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "lsqgan", version, about = "Style-based quantum GAN experiments", args_override_self = true)]
pub struct Cli {
    /// Worker threads for parallel sections (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// key=value file whose entries override command-line flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Log verbosity (error, warn, info, debug).
    #[arg(long, global = true, default_value = "info")]
    pub log: String,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train the dense autoencoder on IDX images.
    TrainAe(TrainAe),
    /// Encode images into latent features with a trained autoencoder.
    ExtractFeatures(ExtractFeatures),
    /// Train a quantum or classical generator against latent features.
    TrainGan(TrainGan),
    /// Sample features (and optionally decoded images) from a generator.
    Generate(Generate),
    /// Distribution distances between two feature sets.
    Evaluate(Evaluate),
    /// Monte Carlo variance scans of the loss or the generator gradient.
    BpScan(BpScan),
    /// Closed-form variance lower bounds over a grid.
    BoundTable(BoundTable),
    /// Finite-shot statistics of a trained generator.
    ShotScan(ShotScan),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::TrainAe(_) => "train-ae",
            Command::ExtractFeatures(_) => "extract-features",
            Command::TrainGan(_) => "train-gan",
            Command::Generate(_) => "generate",
            Command::Evaluate(_) => "evaluate",
            Command::BpScan(_) => "bp-scan",
            Command::BoundTable(_) => "bound-table",
            Command::ShotScan(_) => "shot-scan",
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct Output {
    /// Output directory; defaults to `$LSQGAN_OUT/<command>` or `runs/<command>`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct ImageSource {
    /// Directory with `<split>-images-idx3-ubyte` and `<split>-labels-idx1-ubyte` (optionally .gz).
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value = "train")]
    pub split: String,
    /// Use only the first N images.
    #[arg(long)]
    pub limit: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
pub struct TrainAe {
    #[command(flatten)]
    pub images: ImageSource,
    #[arg(long, default_value_t = 100)]
    pub epochs: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    #[arg(long, default_value_t = 20)]
    pub latent_dim: usize,
    #[arg(long, value_delimiter = ',', default_value = "256,64")]
    pub hidden: Vec<usize>,
    #[arg(long, default_value_t = 64)]
    pub batch: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args, Serialize)]
pub struct ExtractFeatures {
    /// Autoencoder checkpoint.
    #[arg(long)]
    pub ae: PathBuf,
    #[command(flatten)]
    pub images: ImageSource,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorFamily {
    Quantum,
    Classical,
}

#[derive(Debug, Args, Serialize)]
pub struct TrainGan {
    /// Real feature set.
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long, value_enum, default_value_t = GeneratorFamily::Quantum)]
    pub generator: GeneratorFamily,
    #[arg(long, default_value = "circuit1")]
    pub ansatz: String,
    #[arg(long, default_value_t = 2)]
    pub depth: usize,
    /// Qubits; defaults to half the feature dimension.
    #[arg(long)]
    pub n: Option<usize>,
    /// Latent noise dimension; defaults to the qubit count.
    #[arg(long)]
    pub latent_dim: Option<usize>,
    /// Scale the latent term by 1/sqrt(latent_dim).
    #[arg(long)]
    pub rescale: bool,
    /// Hidden widths of the classical generator.
    #[arg(long, value_delimiter = ',', default_value = "50,30")]
    pub hidden: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "100,50")]
    pub critic_hidden: Vec<usize>,
    #[arg(long, default_value_t = 50)]
    pub epochs: usize,
    #[arg(long, default_value_t = 64)]
    pub batch: usize,
    #[arg(long, default_value_t = 5)]
    pub n_critic: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    #[arg(long, default_value_t = 0.5)]
    pub beta1: f64,
    #[arg(long, default_value_t = 0.999)]
    pub beta2: f64,
    #[arg(long, default_value_t = 10.0)]
    pub lambda: f64,
    /// Quantum parameter init range U(-delta, delta).
    #[arg(long, default_value_t = 0.01)]
    pub delta: f64,
    #[arg(long, default_value_t = 512)]
    pub eval_size: usize,
    #[arg(long, default_value_t = 100)]
    pub jsd_k: usize,
    /// Save generator and critic every N epochs (0: only at the end).
    #[arg(long, default_value_t = 0)]
    pub checkpoint_every: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args, Serialize)]
pub struct Generate {
    /// Generator checkpoint.
    #[arg(long = "gen")]
    pub generator: PathBuf,
    /// Autoencoder checkpoint; when given, decoded images are written as IDX.
    #[arg(long)]
    pub ae: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    pub count: usize,
    /// Measurements per expectation value; 0 is the analytic limit.
    #[arg(long, default_value_t = 0)]
    pub shots: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args, Serialize)]
pub struct Evaluate {
    #[arg(long)]
    pub real: PathBuf,
    #[arg(long)]
    pub fake: PathBuf,
    /// k-means clusters for JSD.
    #[arg(long = "k", default_value_t = 100)]
    pub k: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Autoencoder for pixel-space JSD and Fréchet distance of decoded images.
    #[arg(long)]
    pub ae: Option<PathBuf>,
    /// Labelled IDX directory used to train the classifier behind the IS analogue.
    #[arg(long, requires = "ae")]
    pub classifier_data: Option<PathBuf>,
    #[arg(long, default_value_t = 10_000)]
    pub classifier_limit: usize,
    #[arg(long, default_value_t = 3)]
    pub classifier_epochs: usize,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScanMode {
    Loss,
    GanGrad,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InitFamily {
    Normal,
    Uniform,
}

#[derive(Debug, Args, Serialize)]
pub struct BpScan {
    #[arg(long, value_enum)]
    pub mode: ScanMode,
    #[arg(long, default_value = "esu2-pairwise")]
    pub ansatz: String,
    #[arg(long, default_value_t = 2)]
    pub n_min: usize,
    #[arg(long, default_value_t = 8)]
    pub n_max: usize,
    /// `log`, `poly`, or a fixed integer depth.
    #[arg(long, default_value = "poly")]
    pub depth_rule: String,
    /// σ for normal inits, δ for uniform ones; `1/n` scales with the qubit count.
    #[arg(long, default_value = "0.1")]
    pub width: String,
    /// Angle distribution for loss scans (gradient scans are always uniform).
    #[arg(long, value_enum, default_value_t = InitFamily::Normal)]
    pub init: InitFamily,
    /// Loss observable: local-z, local-x, global-z or global-x.
    #[arg(long, default_value = "local-z")]
    pub observable: String,
    #[arg(long, default_value_t = 2000)]
    pub draws: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args, Serialize)]
pub struct BoundTable {
    /// local-z or local-x.
    #[arg(long, default_value = "local-z")]
    pub observable: String,
    #[arg(long, default_value_t = 2)]
    pub n_min: usize,
    #[arg(long, default_value_t = 12)]
    pub n_max: usize,
    /// Comma-separated σ values; `1/n` is accepted.
    #[arg(long, value_delimiter = ',', default_value = "0.05,0.1,0.3,1/n")]
    pub sigmas: Vec<String>,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args, Serialize)]
pub struct ShotScan {
    /// Generator checkpoint.
    #[arg(long = "gen")]
    pub generator: PathBuf,
    /// Training features used as the reference distribution.
    #[arg(long)]
    pub train: PathBuf,
    /// Autoencoder checkpoint; adds pixel-space statistics.
    #[arg(long)]
    pub ae: Option<PathBuf>,
    /// Smallest and largest shot exponents k in 2^k.
    #[arg(long, default_value_t = 4)]
    pub k_min: u32,
    #[arg(long, default_value_t = 13)]
    pub k_max: u32,
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 500)]
    pub bins: usize,
    #[arg(long, default_value_t = 2000)]
    pub reference_limit: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub output: Output,
}
