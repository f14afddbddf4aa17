//! Resolved invocations: every effective parameter of a run, serialized as
//! `config-echo.json` and replayable from it.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use unmask::corpus::{clean_corpus, default_bogus_patterns, load_bogus_patterns, load_corpus, save_corpus};
use unmask::eval::{
    make_publisher_folds, run_experiment_with, sweep_with, write_features_tsv, write_sweep_csv, FoldPlan,
};
use unmask::lexicon::{load_lexicon, top_k};
use unmask::masking::mask_corpus;
use unmask::{ExperimentConfig, FrequencyLexicon, MaskMode, PruningConfig};

use crate::args::{CleanArgs, ExperimentArgs, MaskArgs, SweepArgs, Switch, TrainingArgs};

pub const ECHO_FILE: &str = "config-echo.json";
pub const REPORT_FILE: &str = "report.json";
pub const SWEEP_FILE: &str = "sweep.csv";
pub const SWEEP_JSON_FILE: &str = "sweep.json";
pub const FEATURES_FILE: &str = "features.tsv";
pub const CLEANING_REPORT_FILE: &str = "cleaning-report.json";

/// Errors in the input data or files, reported with exit code 2.
#[derive(Debug)]
pub struct DataError(pub String);

impl std::fmt::Display for DataError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl<E: std::error::Error> From<E> for DataError {
    fn from(e: E) -> Self {
        DataError(e.to_string())
    }
}

fn io_error(path: &Path, e: std::io::Error) -> DataError {
    DataError(format!("{}: {e}", path.display()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Echo {
    pub tool: String,
    pub version: String,
    #[serde(flatten)]
    pub run: Run,
}

impl Echo {
    pub fn new(run: Run) -> Self {
        Echo { tool: "unmask".into(), version: env!("CARGO_PKG_VERSION").into(), run }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "lowercase")]
pub enum Run {
    Clean {
        corpus: PathBuf,
        out: PathBuf,
        report: PathBuf,
        bogus_patterns: Option<PathBuf>,
    },
    Mask {
        corpus: PathBuf,
        lexicon: Option<PathBuf>,
        out: PathBuf,
        mode: MaskMode,
        k: usize,
    },
    Cv {
        #[serde(flatten)]
        inputs: Inputs,
        config: ExperimentConfig,
    },
    Sweep {
        #[serde(flatten)]
        inputs: Inputs,
        grid: Vec<ExperimentConfig>,
    },
    Features {
        #[serde(flatten)]
        inputs: Inputs,
        config: ExperimentConfig,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Inputs {
    pub corpus: PathBuf,
    pub lexicon: Option<PathBuf>,
    pub fold_plan: Option<PathBuf>,
    pub out: PathBuf,
}

/// Absolute form of an input path, so an echo can be replayed from any
/// working directory. Missing inputs are a data error.
fn input_path(path: &Path) -> Result<PathBuf, DataError> {
    fs::canonicalize(path).map_err(|e| DataError(format!("{}: {e}", path.display())))
}

fn optional_input(path: &Option<PathBuf>) -> Result<Option<PathBuf>, DataError> {
    path.as_deref().map(input_path).transpose()
}

fn sibling(path: &Path, name: &str) -> PathBuf {
    path.parent().unwrap_or(Path::new("")).join(name)
}

fn training_config(t: &TrainingArgs) -> ExperimentConfig {
    let pruning = PruningConfig {
        min_total: t.min_ngram_freq,
        max_total: if t.under_50_pruning { PruningConfig::UNDER_50.max_total } else { t.max_ngram_freq },
    };
    ExperimentConfig {
        pruning,
        oversample: t.oversample == Switch::On,
        seed: t.seed,
        l2_normalize: t.l2_normalize,
        nb_alpha: t.nb_alpha,
        svm_lambda: t.svm_lambda,
        svm_epochs: t.svm_epochs as usize,
        ..ExperimentConfig::default()
    }
}

fn inputs(t: &TrainingArgs) -> Result<Inputs, DataError> {
    Ok(Inputs {
        corpus: input_path(&t.corpus)?,
        lexicon: optional_input(&t.lexicon)?,
        fold_plan: optional_input(&t.fold_plan)?,
        out: t.out.clone(),
    })
}

impl Run {
    pub fn clean(args: &CleanArgs) -> Result<Run, DataError> {
        Ok(Run::Clean {
            corpus: input_path(&args.corpus)?,
            report: args.report.clone().unwrap_or_else(|| sibling(&args.out, CLEANING_REPORT_FILE)),
            out: args.out.clone(),
            bogus_patterns: optional_input(&args.bogus_patterns)?,
        })
    }

    pub fn mask(args: &MaskArgs) -> Result<Run, DataError> {
        Ok(Run::Mask {
            corpus: input_path(&args.corpus)?,
            lexicon: optional_input(&args.lexicon)?,
            out: args.out.clone(),
            mode: args.mode.into(),
            k: args.k as usize,
        })
    }

    fn experiment_config(args: &ExperimentArgs) -> ExperimentConfig {
        ExperimentConfig {
            mode: args.mode.into(),
            k: args.k as usize,
            n: args.n as usize,
            classifier: args.classifier.into(),
            top_features: args.top_features,
            all_fold_features: args.all_folds,
            ..training_config(&args.training)
        }
    }

    pub fn cv(args: &ExperimentArgs) -> Result<Run, DataError> {
        Ok(Run::Cv { inputs: inputs(&args.training)?, config: Self::experiment_config(args) })
    }

    pub fn features(args: &ExperimentArgs) -> Result<Run, DataError> {
        Ok(Run::Features { inputs: inputs(&args.training)?, config: Self::experiment_config(args) })
    }

    /// Grid in mode, k, n, classifier nesting order.
    pub fn sweep(args: &SweepArgs) -> Result<Run, DataError> {
        let base = training_config(&args.training);
        let mut grid = Vec::new();
        for &mode in &args.mode {
            for &k in &args.k.0 {
                for &n in &args.n.0 {
                    for &classifier in &args.classifier {
                        grid.push(ExperimentConfig {
                            mode: mode.into(),
                            k,
                            n,
                            classifier: classifier.into(),
                            ..base.clone()
                        });
                    }
                }
            }
        }
        Ok(Run::Sweep { inputs: inputs(&args.training)?, grid })
    }

    /// Directory that receives `config-echo.json`.
    pub fn echo_dir(&self) -> PathBuf {
        match self {
            Run::Clean { out, .. } | Run::Mask { out, .. } => out.parent().unwrap_or(Path::new("")).to_path_buf(),
            Run::Cv { inputs, .. } | Run::Sweep { inputs, .. } | Run::Features { inputs, .. } => inputs.out.clone(),
        }
    }

    /// Points every output at `dir`, keeping file names.
    pub fn redirect(&mut self, dir: &Path) {
        let move_file = |p: &mut PathBuf| {
            if let Some(name) = p.file_name() {
                *p = dir.join(name);
            }
        };
        match self {
            Run::Clean { out, report, .. } => {
                move_file(out);
                move_file(report);
            }
            Run::Mask { out, .. } => move_file(out),
            Run::Cv { inputs, .. } | Run::Sweep { inputs, .. } | Run::Features { inputs, .. } => {
                inputs.out = dir.to_path_buf()
            }
        }
    }

    pub fn execute(&self) -> Result<(), DataError> {
        let dir = self.echo_dir();
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(&dir).map_err(|e| io_error(&dir, e))?;
        }
        write_json(&dir.join(ECHO_FILE), &Echo::new(self.clone()))?;

        match self {
            Run::Clean { corpus, out, report, bogus_patterns } => {
                let patterns = match bogus_patterns {
                    Some(p) => load_bogus_patterns(p)?,
                    None => default_bogus_patterns(),
                };
                let (cleaned, summary) = clean_corpus(&load_corpus(corpus)?, &patterns);
                save_corpus(&cleaned, out).map_err(|e| io_error(out, e))?;
                write_json(report, &summary)?;
                log::info!("kept {} of {} articles", summary.retained, summary.input);
            }
            Run::Mask { corpus, lexicon, out, mode, k } => {
                let corpus = load_corpus(corpus)?;
                let masked = match mode {
                    MaskMode::Identity => corpus,
                    _ => {
                        let lexicon = require_lexicon(lexicon.as_deref(), *mode)?;
                        mask_corpus(&corpus, &top_k(&lexicon, *k), *mode)
                    }
                };
                save_corpus(&masked, out).map_err(|e| io_error(out, e))?;
            }
            Run::Cv { inputs, config } => {
                let (corpus, lexicon, plan) = inputs.load(std::slice::from_ref(config))?;
                let result = run_experiment_with(&corpus, lexicon.as_ref(), &plan, config)?;
                log::info!(
                    "macro F1 {:.4} (pooled), {:.4} (fold mean)",
                    result.aggregate.macro_f1,
                    result.fold_mean_macro_f1
                );
                write_json(&inputs.out.join(REPORT_FILE), &result)?;
            }
            Run::Features { inputs, config } => {
                let (corpus, lexicon, plan) = inputs.load(std::slice::from_ref(config))?;
                let result = run_experiment_with(&corpus, lexicon.as_ref(), &plan, config)?;
                let path = inputs.out.join(FEATURES_FILE);
                write_with(&path, |w| write_features_tsv(&result.features, w))?;
            }
            Run::Sweep { inputs, grid } => {
                let (corpus, lexicon, plan) = inputs.load(grid)?;
                let rows = sweep_with(&corpus, lexicon.as_ref(), &plan, grid)?;
                write_with(&inputs.out.join(SWEEP_FILE), |w| write_sweep_csv(&rows, w))?;
                write_json(&inputs.out.join(SWEEP_JSON_FILE), &rows)?;
            }
        }
        Ok(())
    }
}

fn require_lexicon(path: Option<&Path>, mode: MaskMode) -> Result<FrequencyLexicon, DataError> {
    match path {
        Some(p) => Ok(load_lexicon(p)?),
        None => Err(DataError(format!("{mode} masking needs --lexicon"))),
    }
}

impl Inputs {
    fn load(
        &self,
        configs: &[ExperimentConfig],
    ) -> Result<(unmask::Corpus, Option<FrequencyLexicon>, FoldPlan), DataError> {
        let corpus = load_corpus(&self.corpus)?;
        let lexicon = match &self.lexicon {
            Some(p) => Some(load_lexicon(p)?),
            None => {
                if let Some(c) = configs.iter().find(|c| c.mode != MaskMode::Identity) {
                    return Err(DataError(format!("{} masking needs --lexicon", c.mode)));
                }
                None
            }
        };
        let explicit = self.fold_plan.as_deref().map(FoldPlan::load).transpose()?;
        let plan = make_publisher_folds(&corpus, explicit.as_ref())?;
        Ok((corpus, lexicon, plan))
    }
}

fn write_with(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<(), DataError> {
    let file = File::create(path).map_err(|e| io_error(path, e))?;
    let mut w = BufWriter::new(file);
    f(&mut w).and_then(|_| w.flush()).map_err(|e| io_error(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), DataError> {
    write_with(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        w.write_all(b"\n")
    })
}

pub fn read_echo(path: &Path) -> Result<Echo, DataError> {
    let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    serde_json::from_str(&text).map_err(|e| DataError(format!("{}: {e}", path.display())))
}
