//! Command-line surface. One subcommand per pipeline stage; every seeded
//! stage defaults to [`crate::DEFAULT_SEED`] so bare invocations reproduce.

use crate::DEFAULT_SEED;
use clap::{Parser, Subcommand};
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(
    name = "prigen",
    version,
    about = "Pipeline for extracting permission-requiring code segments from APKs \
             and generating privacy captions",
    after_help = "Set PRIGEN_LOG=error|info|debug to control diagnostics (stderr)."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Extract permission-requiring code segments (PRCS) from APKs
    Extract(ExtractArgs),
    /// Parse Java-subset methods and attach AST path contexts
    Paths(PathsArgs),
    /// Corpus preparation: dedup, filter, split
    Dataset(DatasetArgs),
    /// Train the caption model on dataset lines
    Train(TrainArgs),
    /// Generate captions for path-context lines with a trained model
    Predict(PredictArgs),
    /// Assemble privacy captions for PRCS records
    Caption(CaptionArgs),
    /// Score hypothesis captions against references (BLEU-4 / ROUGE-LCS)
    Eval(EvalArgs),
}

#[derive(Debug, Parser)]
pub struct ExtractArgs {
    /// APK files, or exactly one directory of .apk files for batch mode.
    /// Explicit files fail fast; batch mode skips and logs per-APK failures.
    #[arg(required = true)]
    pub apks: Vec<PathBuf>,
    /// Permission-requiring API database (JSON)
    #[arg(long)]
    pub db: PathBuf,
    /// Maximum hop distance (1 = direct callers of permission APIs)
    #[arg(long, default_value_t = 1)]
    pub hops: u32,
    /// Output PRCS records (JSON Lines), sorted by apk_id
    #[arg(long)]
    pub out: PathBuf,
    /// Concurrent APK analyses in batch mode
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
}

#[derive(Debug, Parser)]
pub struct PathsArgs {
    /// Corpus records (JSON Lines): {"example_id", "source_text",
    /// "target_caption"} where the caption is a string or a token array
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Output corpus records with contexts, loc, and obfuscation_score filled
    #[arg(long)]
    pub out: PathBuf,
    /// Maximum internal nodes on a path
    #[arg(long = "max-length", default_value_t = 9)]
    pub max_length: usize,
    /// Maximum child-index spread at the path apex
    #[arg(long = "max-width", default_value_t = 2)]
    pub max_width: usize,
    /// Maximum contexts kept per method (seeded sampling beyond that)
    #[arg(long = "max-contexts", default_value_t = 200)]
    pub max_contexts: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// API database whose class/method names are exempt from the
    /// short-identifier obfuscation score
    #[arg(long)]
    pub db: Option<PathBuf>,
}

#[derive(Debug, Parser)]
pub struct DatasetArgs {
    #[command(subcommand)]
    pub op: DatasetOp,
}

#[derive(Debug, Subcommand)]
pub enum DatasetOp {
    /// Remove near-duplicates by token-shingle Jaccard similarity
    Dedup {
        /// Corpus records (JSON Lines)
        #[arg(long = "in")]
        input: PathBuf,
        /// Kept records (JSON Lines)
        #[arg(long)]
        out: PathBuf,
        /// Removed/witness pairs (JSON Lines)
        #[arg(long)]
        removed: Option<PathBuf>,
        /// Shingle size in tokens
        #[arg(long, default_value_t = 5)]
        shingle: usize,
        /// Jaccard similarity threshold in (0, 1]
        #[arg(long, default_value_t = 0.8)]
        threshold: f64,
    },
    /// Drop examples whose obfuscation score exceeds the cutoff
    Filter {
        /// Corpus records (JSON Lines)
        #[arg(long = "in")]
        input: PathBuf,
        /// Kept records (JSON Lines)
        #[arg(long)]
        out: PathBuf,
        /// Maximum allowed obfuscation score in [0, 1]
        #[arg(long = "max-obf", default_value_t = 0.5)]
        max_obf: f64,
    },
    /// Seeded shuffle and contiguous split into train/validation/test
    Split {
        /// Corpus records (JSON Lines)
        #[arg(long = "in")]
        input: PathBuf,
        /// Directory receiving train.txt, validation.txt, test.txt
        /// (dataset line format)
        #[arg(long = "out-dir")]
        out_dir: PathBuf,
        /// Comma-separated train,validation,test fractions summing to 1
        #[arg(long, default_value = "0.8,0.1,0.1")]
        split: String,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
}

#[derive(Debug, Parser)]
pub struct TrainArgs {
    /// Directory holding train.txt (required) and validation.txt (optional)
    /// in the dataset line format
    #[arg(long)]
    pub data: PathBuf,
    /// Output model checkpoint
    #[arg(long)]
    pub out: PathBuf,
    /// Subtoken/node/target embedding size
    #[arg(long, default_value_t = 64)]
    pub emb: usize,
    /// Encoder recurrent state size
    #[arg(long, default_value_t = 64)]
    pub enc: usize,
    /// Decoder state size
    #[arg(long, default_value_t = 128)]
    pub dec: usize,
    /// Maximum target length including the end token
    #[arg(long = "max-target", default_value_t = 37)]
    pub max_target: usize,
    /// Maximum contexts fed to the encoder per example
    #[arg(long = "max-contexts", default_value_t = 200)]
    pub max_contexts: usize,
    #[arg(long, default_value_t = 20)]
    pub epochs: usize,
    /// Minibatch size
    #[arg(long, default_value_t = 32)]
    pub batch: usize,
    /// Adam learning rate
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    /// Inverted-dropout keep probability on context vectors, in (0, 1]
    #[arg(long = "dropout-keep", default_value_t = 0.75)]
    pub dropout_keep: f64,
    /// Minimum token frequency for vocabulary inclusion
    #[arg(long = "min-count", default_value_t = 1)]
    pub min_count: u64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
}

#[derive(Debug, Parser)]
pub struct PredictArgs {
    /// Model checkpoint from `train`
    #[arg(long)]
    pub model: PathBuf,
    /// Dataset lines; the target field ('-' if absent) is ignored
    #[arg(long = "in")]
    pub input: PathBuf,
    /// One predicted caption per input line
    #[arg(long)]
    pub out: PathBuf,
    /// Beam width (0 = use the width stored in the checkpoint)
    #[arg(long, default_value_t = 0)]
    pub beam: usize,
    /// Also write each input line's target field here, aligned with --out
    /// (convenient `eval --ref` input)
    #[arg(long = "refs-out")]
    pub refs_out: Option<PathBuf>,
}

#[derive(Debug, Parser)]
pub struct CaptionArgs {
    /// Model checkpoint from `train`
    #[arg(long)]
    pub model: PathBuf,
    /// PRCS records (JSON Lines) from `extract`
    #[arg(long)]
    pub prcs: PathBuf,
    /// Permission-requiring API database (JSON)
    #[arg(long)]
    pub db: PathBuf,
    /// PRCS records plus code_caption / privacy_caption fields (JSON Lines)
    #[arg(long)]
    pub out: PathBuf,
    /// Beam width (0 = use the width stored in the checkpoint)
    #[arg(long, default_value_t = 0)]
    pub beam: usize,
}

#[derive(Debug, Parser)]
pub struct EvalArgs {
    /// Hypothesis captions, one per line
    #[arg(long)]
    pub hyp: PathBuf,
    /// Reference captions, aligned line by line with --hyp
    #[arg(long = "ref")]
    pub reference: PathBuf,
    /// Also write the JSON report here (it always prints to stdout)
    #[arg(long)]
    pub out: Option<PathBuf>,
}
