use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use srl_transfer::trainer::Ablation;

/// Verbal-to-nominal semantic role labeling transfer.
///
/// Every run writes its outputs and a `manifest.json` (config hash, seed,
/// versions, input and output digests) into the output directory. Exit codes:
/// 2 usage, 3 I/O, 4 configuration, 5 training divergence, 6 data.
#[derive(Debug, Parser)]
#[command(name = "srlt", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// TOML run configuration with optional sections [synthetic], [training],
    /// [filter], [identify], [augment], [bc], [factorization], [evaluation].
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Seed for data generation, initialization and sampling; overrides the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Output directory; defaults to $SRLT_OUT/<subcommand>, or runs/<subcommand>.
    #[arg(long, global = true, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Ingest CoNLL-2009 files, verbalize nominal predicates, replace
    /// prepositional arguments by their headwords and filter predicates and roles.
    Prepare(PrepareArgs),
    /// Generate verbal, nominal, dev and test corpora with a known oracle.
    Synth(SynthArgs),
    /// Train the full or ablated model.
    Train(TrainArgs),
    /// Apply a trained model to a corpus.
    Label(LabelArgs),
    /// Run a comparison system.
    Baseline(BaselineArgs),
    /// Score a prediction file.
    Eval(EvalArgs),
    /// Bhattacharyya overlap of verbal and nominal argument distributions.
    AnalyzeBc(AnalyzeBcArgs),
    /// Rule-based argument identification over a CoNLL-2009 file.
    IdentifyArgs(IdentifyArgs),
    /// Train across augmentation sizes and record test accuracy per size.
    SweepAugment(SweepArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Prepare(_) => "prepare",
            Command::Synth(_) => "synth",
            Command::Train(_) => "train",
            Command::Label(_) => "label",
            Command::Baseline(_) => "baseline",
            Command::Eval(_) => "eval",
            Command::AnalyzeBc(_) => "analyze-bc",
            Command::IdentifyArgs(_) => "identify-args",
            Command::SweepAugment(_) => "sweep-augment",
        }
    }
}

/// Model and objective overrides shared by training commands.
#[derive(Debug, Args, Clone, Default)]
pub struct TrainingFlags {
    /// Disable a component; repeatable.
    #[arg(long, value_enum)]
    pub ablate: Vec<AblationArg>,

    /// Weight of the discriminative term.
    #[arg(long)]
    pub alpha: Option<f64>,

    /// Gumbel-softmax temperature.
    #[arg(long)]
    pub temperature: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AblationArg {
    Z,
    Joint,
    Augment,
}

impl From<AblationArg> for Ablation {
    fn from(a: AblationArg) -> Self {
        match a {
            AblationArg::Z => Ablation::Z,
            AblationArg::Joint => Ablation::Joint,
            AblationArg::Augment => Ablation::Augment,
        }
    }
}

#[derive(Debug, Args)]
pub struct PrepareArgs {
    /// CoNLL-2009 file whose verbal predicates form the labeled source corpus.
    #[arg(long)]
    pub verbal_conll: PathBuf,
    /// CoNLL-2009 file whose nominal predicates form the target corpus.
    #[arg(long)]
    pub nominal_conll: PathBuf,
    /// Two-column noun-to-verb TSV used to verbalize nominal predicate lemmas.
    #[arg(long)]
    pub verbalization: Option<PathBuf>,
    /// CoNLL-2009 file of unlabeled verbal sentences for augmentation.
    #[arg(long)]
    pub pool_conll: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Held-out labeled verbal instances for early stopping.
    #[arg(long, default_value_t = 500)]
    pub n_dev: usize,
    /// Held-out gold-labeled nominal instances.
    #[arg(long, default_value_t = 2000)]
    pub n_test: usize,
    /// Held-out unlabeled verbal instances for augmentation; 0 writes none.
    #[arg(long, default_value_t = 0)]
    pub n_pool: usize,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Labeled verbal corpus (JSONL).
    #[arg(long)]
    pub verbal: PathBuf,
    /// Unlabeled nominal corpus (JSONL); gold roles, if present, are ignored.
    #[arg(long)]
    pub nominal: PathBuf,
    /// Labeled development corpus for early stopping.
    #[arg(long)]
    pub dev: Option<PathBuf>,
    /// Unlabeled verbal pool to pseudo-label for augmentation.
    #[arg(long)]
    pub pool: Option<PathBuf>,
    /// Augmentation instances sampled per nominal predicate.
    #[arg(long)]
    pub n_augment: Option<usize>,
    #[command(flatten)]
    pub training: TrainingFlags,
}

#[derive(Debug, Args)]
pub struct LabelArgs {
    /// Model directory containing model.json and params.bin.
    #[arg(long)]
    pub model: PathBuf,
    /// Corpus to label (JSONL).
    #[arg(long)]
    pub corpus: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BaselineKind {
    MostFrequent,
    Factorization,
    DirectTransfer,
    AllA0,
    Syntfun,
    Arg2vec,
}

#[derive(Debug, Args)]
pub struct BaselineArgs {
    #[arg(value_enum)]
    pub kind: BaselineKind,
    /// Corpus to label (JSONL).
    #[arg(long)]
    pub corpus: PathBuf,
    /// Labeled verbal training corpus; required by the supervised systems.
    #[arg(long)]
    pub verbal: Option<PathBuf>,
    /// Development corpus for Direct-transfer early stopping.
    #[arg(long)]
    pub dev: Option<PathBuf>,
    /// Word vectors in text format for Arg2vec.
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// Number of Arg2vec clusters.
    #[arg(long, default_value_t = 20)]
    pub clusters: usize,
    #[command(flatten)]
    pub training: TrainingFlags,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Prediction records (JSONL).
    #[arg(long)]
    pub predictions: PathBuf,
    /// Report purity, collocation and their F1 instead of supervised scores.
    #[arg(long)]
    pub clustering: bool,
    /// Ignore arguments that coincide with their predicate token.
    #[arg(long)]
    pub drop_self_loops: bool,
    /// Macro-average the "All" column instead of micro-averaging.
    #[arg(long = "macro")]
    pub macro_all: bool,
}

#[derive(Debug, Args)]
pub struct AnalyzeBcArgs {
    /// Gold-labeled verbal corpus (JSONL).
    #[arg(long)]
    pub verbal: PathBuf,
    /// Gold-labeled nominal corpus (JSONL).
    #[arg(long)]
    pub nominal: PathBuf,
    /// Contributions listed per pair in the table.
    #[arg(long, default_value_t = 5)]
    pub top: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DomainArg {
    Verbal,
    Nominal,
}

#[derive(Debug, Args)]
pub struct IdentifyArgs {
    /// CoNLL-2009 file with gold predicates.
    #[arg(long)]
    pub conll: PathBuf,
    /// Which predicates to process.
    #[arg(long, value_enum, default_value_t = DomainArg::Nominal)]
    pub domain: DomainArg,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub verbal: PathBuf,
    #[arg(long)]
    pub nominal: PathBuf,
    /// Unlabeled verbal pool to pseudo-label.
    #[arg(long)]
    pub pool: PathBuf,
    /// Gold-labeled nominal test corpus.
    #[arg(long)]
    pub test: PathBuf,
    #[arg(long)]
    pub dev: Option<PathBuf>,
    /// Augmentation sizes per predicate.
    #[arg(long, value_delimiter = ',', default_value = "0,10,100,1000")]
    pub sizes: Vec<usize>,
    #[command(flatten)]
    pub training: TrainingFlags,
}
