use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use unmask::{ClassifierKind, MaskMode};

#[derive(Debug, Parser)]
#[command(name = "unmask", version, about = "Masked character n-gram classification of news orientation")]
pub struct Cli {
    /// Increase log detail (-v info, -vv debug)
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Remove empty, bogus, duplicate and conflicting articles
    Clean(CleanArgs),
    /// Write a masked copy of a corpus
    Mask(MaskArgs),
    /// Run publisher-grouped cross-validation and write report.json
    Cv(ExperimentArgs),
    /// Run a grid of experiments and write sweep.csv
    Sweep(SweepArgs),
    /// Train per fold and write the top features as features.tsv
    Features(ExperimentArgs),
    /// Re-run a command from its config-echo.json
    Replay(ReplayArgs),
}

#[derive(Debug, Args)]
pub struct CleanArgs {
    /// Input corpus (JSONL)
    #[arg(long)]
    pub corpus: PathBuf,
    /// Cleaned corpus to write (JSONL)
    #[arg(long)]
    pub out: PathBuf,
    /// File with one bogus-text pattern per line
    #[arg(long)]
    pub bogus_patterns: Option<PathBuf>,
    /// Cleaning report path [default: cleaning-report.json next to --out]
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MaskArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// Frequency word list, most frequent first
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    /// Masked corpus to write (JSONL)
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = ModeArg::Topic)]
    pub mode: ModeArg,
    #[arg(long, default_value_t = 500, value_parser = clap::value_parser!(u64).range(1..))]
    pub k: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Topic,
    Style,
    Identity,
}

impl From<ModeArg> for MaskMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Topic => MaskMode::TopicModel,
            ModeArg::Style => MaskMode::StyleModel,
            ModeArg::Identity => MaskMode::Identity,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ClassifierArg {
    Nb,
    Svm,
}

impl From<ClassifierArg> for ClassifierKind {
    fn from(c: ClassifierArg) -> Self {
        match c {
            ClassifierArg::Nb => ClassifierKind::Nb,
            ClassifierArg::Svm => ClassifierKind::Svm,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Switch {
    On,
    Off,
}

/// Inputs and settings shared by every training command.
#[derive(Debug, Args)]
pub struct TrainingArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// Frequency word list; optional for identity mode
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    /// Output directory
    #[arg(long)]
    pub out: PathBuf,
    /// JSON fold plan: {"folds": [{"left", "mainstream", "right"}, ...]}
    #[arg(long)]
    pub fold_plan: Option<PathBuf>,
    /// Keep only n-grams seen fewer than 50 times in the training text
    #[arg(long = "paper-pruning", conflicts_with = "max_ngram_freq")]
    pub under_50_pruning: bool,
    /// Drop n-grams seen fewer than this many times in the training text
    #[arg(long)]
    pub min_ngram_freq: Option<u64>,
    /// Drop n-grams seen this many times or more in the training text
    #[arg(long)]
    pub max_ngram_freq: Option<u64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Balance training labels by random duplication
    #[arg(long, value_enum, default_value_t = Switch::On)]
    pub oversample: Switch,
    /// Scale each document vector to unit length
    #[arg(long)]
    pub l2_normalize: bool,
    /// Naive Bayes additive smoothing
    #[arg(long, default_value_t = 1.0)]
    pub nb_alpha: f64,
    /// SVM regularization strength
    #[arg(long, default_value_t = 1e-4)]
    pub svm_lambda: f64,
    #[arg(long, default_value_t = 20, value_parser = clap::value_parser!(u64).range(1..))]
    pub svm_epochs: u64,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[command(flatten)]
    pub training: TrainingArgs,
    #[arg(long, value_enum, default_value_t = ModeArg::Topic)]
    pub mode: ModeArg,
    /// Number of most frequent words in the masking word set
    #[arg(long, default_value_t = 500, value_parser = clap::value_parser!(u64).range(1..))]
    pub k: u64,
    /// Character n-gram length
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u64).range(1..))]
    pub n: u64,
    #[arg(long, value_enum, default_value_t = ClassifierArg::Svm)]
    pub classifier: ClassifierArg,
    /// Features listed per label
    #[arg(long, default_value_t = 5)]
    pub top_features: usize,
    /// Report features of all folds instead of only the last
    #[arg(long)]
    pub all_folds: bool,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub training: TrainingArgs,
    /// Comma-separated modes
    #[arg(long, value_enum, value_delimiter = ',', default_value = "topic")]
    pub mode: Vec<ModeArg>,
    /// Values such as 100,200 or ranges start:end:step, inclusive
    #[arg(long, default_value = "500", value_parser = parse_grid)]
    pub k: Grid,
    #[arg(long, default_value = "5", value_parser = parse_grid)]
    pub n: Grid,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "svm")]
    pub classifier: Vec<ClassifierArg>,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    /// A config-echo.json written by an earlier run
    pub config: PathBuf,
    /// Write outputs here instead of the recorded location
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Positive integers from a list/range expression.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grid(pub Vec<usize>);

pub fn parse_grid(s: &str) -> Result<Grid, String> {
    let mut values = Vec::new();
    for item in s.split(',').map(str::trim) {
        let parts: Vec<&str> = item.split(':').collect();
        let num = |p: &str| p.trim().parse::<usize>().map_err(|_| format!("{p:?} is not a positive integer"));
        match parts.as_slice() {
            [v] => values.push(num(v)?),
            [start, end] | [start, end, _] => {
                let (start, end) = (num(start)?, num(end)?);
                let step = if parts.len() == 3 { num(parts[2])? } else { 1 };
                if step == 0 || start > end {
                    return Err(format!("bad range {item:?}: need start <= end and step >= 1"));
                }
                values.extend((start..=end).step_by(step));
            }
            _ => return Err(format!("bad grid item {item:?}")),
        }
    }
    if values.contains(&0) {
        return Err("grid values must be at least 1".into());
    }
    Ok(Grid(values))
}
