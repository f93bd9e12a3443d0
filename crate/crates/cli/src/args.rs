use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hsan_core::autodiff::Precision;

#[derive(Debug, Parser)]
#[command(name = "hsan", version, about = "Social-role classification with a hierarchical self-attention network")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic identity corpus plus its public-figure companion.
    GenSynth(GenSynthArgs),
    /// Build a word vocabulary from one or more datasets.
    BuildVocab(BuildVocabArgs),
    /// Train on the identity task with dev-set model selection.
    Train(TrainArgs),
    /// Pretrain on the binary public-figure task.
    Pretrain(PretrainArgs),
    /// Fine-tune a pretrained checkpoint on the identity task.
    Finetune(FinetuneArgs),
    /// Accuracy, macro-F1 and the confusion matrix of a checkpoint.
    Evaluate(ReadArgs),
    /// Per-user predictions and class probabilities.
    Predict(ReadArgs),
    /// Attention importance weights and an HTML heatmap.
    Explain(ExplainArgs),
    /// Train and test every ablation variant over several seeds.
    Ablate(AblateArgs),
    /// Train and test the bag-of-words baselines.
    Baseline(BaselineArgs),
    /// Finite-difference gradient check of every ablation variant.
    Gradcheck(GradcheckArgs),
}

/// Options shared by every subcommand.
#[derive(Debug, Args, Clone, Default)]
pub struct Common {
    /// Preset name (paper, desk, tiny) or a JSON settings file.
    #[arg(long)]
    pub config: Option<String>,
    /// Master seed; overrides the settings.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Settings override as dotted.key=value, repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Allow writing into a non-empty output directory.
    #[arg(long)]
    pub overwrite: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PrecisionArg {
    F32,
    F64,
}

impl From<PrecisionArg> for Precision {
    fn from(p: PrecisionArg) -> Self {
        match p {
            PrecisionArg::F32 => Precision::F32,
            PrecisionArg::F64 => Precision::F64,
        }
    }
}

#[derive(Debug, Args, Clone, Default)]
pub struct ModelFlags {
    #[arg(long, value_enum)]
    pub precision: Option<PrecisionArg>,
    /// Clip the global gradient norm to this value.
    #[arg(long)]
    pub clip_norm: Option<f64>,
    #[arg(long)]
    pub no_word_attn: bool,
    #[arg(long)]
    pub no_tweet_attn: bool,
    #[arg(long)]
    pub no_field_attn: bool,
    #[arg(long)]
    pub no_charcnn: bool,
    #[arg(long)]
    pub no_description: bool,
    #[arg(long)]
    pub no_tweets: bool,
}

#[derive(Debug, Args)]
pub struct GenSynthArgs {
    /// JSON file with synthetic-corpus settings.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct BuildVocabArgs {
    /// Dataset directory (its train split is used) or file; repeatable.
    #[arg(long, required = true)]
    pub data: Vec<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Directory holding train, dev and optionally test splits.
    #[arg(long)]
    pub data: PathBuf,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Vocabulary file; built from the train split when absent.
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    /// Stratified fraction of the train split to use.
    #[arg(long)]
    pub train_frac: Option<f64>,
    #[command(flatten)]
    pub model: ModelFlags,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct PretrainArgs {
    /// Directory holding the public-figure train and dev splits.
    #[arg(long)]
    pub data: PathBuf,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    /// Identity dataset (directory or file) whose users must not appear here.
    #[arg(long)]
    pub exclude: Option<PathBuf>,
    #[command(flatten)]
    pub model: ModelFlags,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct FinetuneArgs {
    /// Pretrained checkpoint.
    #[arg(long)]
    pub from_ckpt: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub train_frac: Option<f64>,
    #[arg(long)]
    pub clip_norm: Option<f64>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct ReadArgs {
    #[arg(long)]
    pub ckpt: PathBuf,
    /// Dataset file.
    #[arg(long)]
    pub data: PathBuf,
    /// Output directory; defaults to a sibling of the checkpoint.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct ExplainArgs {
    #[command(flatten)]
    pub read: ReadArgs,
    /// Users to explain, from the start of the file.
    #[arg(long, default_value_t = 20)]
    pub limit: usize,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum GridArg {
    Components,
    Attention,
    Both,
}

#[derive(Debug, Args)]
pub struct AblateArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Component ablations, attention ablations, or both.
    #[arg(long, value_enum, default_value = "both")]
    pub grid: GridArg,
    /// Comma-separated seeds; overrides the settings.
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
    #[command(flatten)]
    pub model: ModelFlags,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, ValueEnum, PartialEq, Eq)]
pub enum KindArg {
    Mnb,
    Svm,
    Fasttext,
    All,
}

#[derive(Debug, Args)]
pub struct BaselineArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value = "all")]
    pub kind: KindArg,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    /// Directory for the JSON report.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}
