use std::path::PathBuf;

use alerta_core::data::AblationMode;
use alerta_core::model::ModelKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

/// Default output directory when neither `--out-dir` nor `ALERTA_OUT_DIR` is set.
pub const DEFAULT_OUT_DIR: &str = "alerta-out";

#[derive(Debug, Parser)]
#[command(name = "alerta", version, about = "Joint stock movement and volatility prediction")]
pub struct Cli {
    /// Directory for every artifact this run writes.
    #[arg(long, global = true, env = "ALERTA_OUT_DIR", default_value = DEFAULT_OUT_DIR)]
    pub out_dir: PathBuf,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate per-stock CSVs with a planted signal.
    Synth(SynthArgs),
    /// Window, label and split a directory of per-stock CSVs.
    Prepare(PrepareArgs),
    /// Train one model on a prepared dataset.
    Train(TrainArgs),
    /// Evaluate a checkpoint on one split of a prepared dataset.
    Eval(EvalArgs),
    /// Train and evaluate every feature-group ablation with a shared seed.
    Ablate(AblateArgs),
    /// Train and evaluate the full model next to the plain GRU.
    Baseline(BaselineArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AblationArg {
    Full,
    P,
    S,
    WoM,
}

impl From<AblationArg> for AblationMode {
    fn from(a: AblationArg) -> Self {
        match a {
            AblationArg::Full => AblationMode::Full,
            AblationArg::P => AblationMode::P,
            AblationArg::S => AblationMode::S,
            AblationArg::WoM => AblationMode::WoM,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Alerta,
    Gru,
}

impl From<ModelArg> for ModelKind {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Alerta => ModelKind::Alerta,
            ModelArg::Gru => ModelKind::Gru,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SignalArg {
    /// Every feature column carries the movement signal.
    All,
    /// Only sentiment columns carry it.
    Sentiment,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SplitArg {
    Train,
    Validation,
    Test,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Where to write the CSVs; defaults to `<out-dir>/data`.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long, default_value_t = 5000)]
    pub days: usize,
    /// Feature columns per stock (price excluded).
    #[arg(long, default_value_t = 8)]
    pub features: usize,
    #[arg(long, default_value_t = 1)]
    pub stocks: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Probability of flipping the planted movement direction.
    #[arg(long, default_value_t = 0.1)]
    pub flip: f64,
    /// Days between a feature-0 spike and the volatility event it causes.
    #[arg(long, default_value_t = 7)]
    pub lag: usize,
    /// Window length the data is intended for; must exceed the lag.
    #[arg(long, default_value_t = 10)]
    pub window: usize,
    #[arg(long, value_enum, default_value_t = SignalArg::All)]
    pub signal: SignalArg,
}

#[derive(Debug, Args)]
pub struct PrepareArgs {
    /// Directory of `<stock>.csv` files; defaults to `<out-dir>/data`.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Window length T.
    #[arg(long, default_value_t = 10)]
    pub window: usize,
    /// Comma-separated feature columns; defaults to every non-date column of the first file.
    #[arg(long, value_delimiter = ',')]
    pub features: Option<Vec<String>>,
    #[arg(long, default_value_t = 0.6)]
    pub train_frac: f64,
    #[arg(long, default_value_t = 0.2)]
    pub valid_frac: f64,
    /// Returns strictly inside (low, high) are labeled abstain.
    #[arg(long, default_value_t = -0.005, allow_hyphen_values = true)]
    pub dead_zone_low: f64,
    #[arg(long, default_value_t = 0.005)]
    pub dead_zone_high: f64,
    /// Absolute return at or above which a day is a volatility event.
    #[arg(long, default_value_t = 0.05)]
    pub outlier: f64,
}

/// Hyperparameter overrides shared by the training commands. Unset flags
/// keep the value from `--config`, or the built-in default.
#[derive(Debug, Clone, Default, Args)]
pub struct TrainOptions {
    /// JSON file with (a subset of) the training configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Prepared dataset; defaults to `<out-dir>/dataset.json`.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Expected window length of the dataset.
    #[arg(long)]
    pub window: Option<usize>,
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub patience: Option<usize>,
    /// Divide the weighted hidden-state sum by the harmonic number.
    #[arg(long)]
    pub tda_normalize: bool,
    /// Train encoder and movement head first, then the volatility head alone.
    #[arg(long)]
    pub two_stage: bool,
    /// Use separate weights for the context update.
    #[arg(long)]
    pub separate_context_cell: bool,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub options: TrainOptions,
    #[arg(long, value_enum)]
    pub ablation: Option<AblationArg>,
    #[arg(long, value_enum)]
    pub model: Option<ModelArg>,
    /// Checkpoint path; defaults to `<out-dir>/model.ckpt`.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Prepared dataset; defaults to `<out-dir>/dataset.json`.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Checkpoint; defaults to `<out-dir>/model.ckpt`.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = SplitArg::Test)]
    pub split: SplitArg,
    /// Probabilities at or above this predict the positive class.
    #[arg(long, default_value_t = 0.5)]
    pub threshold: f64,
}

#[derive(Debug, Args)]
pub struct AblateArgs {
    #[command(flatten)]
    pub options: TrainOptions,
    #[arg(long, value_enum)]
    pub model: Option<ModelArg>,
}

#[derive(Debug, Args)]
pub struct BaselineArgs {
    #[command(flatten)]
    pub options: TrainOptions,
    #[arg(long, value_enum)]
    pub ablation: Option<AblationArg>,
}
