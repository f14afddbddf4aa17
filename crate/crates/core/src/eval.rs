//! Publisher-grouped cross-validation, oversampling, metrics and sweeps.
//!
//! Every fold tests on one publisher per orientation and trains on the
//! remaining publishers, so no publisher is seen on both sides. Folds run
//! in parallel; each draws its randomness from `(seed, fold index)` only,
//! which keeps results independent of scheduling.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::io::{self, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{publisher_orientations, Corpus, Orientation};
use crate::features::{
    build_vocabulary, escape_ngram, vectorize, FeatureError, LabeledDataset, NgramVocabulary, PruningConfig,
};
use crate::lexicon::{top_k, FrequencyLexicon};
use crate::masking::{mask_corpus, MaskMode};
use crate::models::{
    train_nb, train_svm, Classifier, ClassifierKind, FeatureReport, Model, ModelError, SvmHyperparameters,
};

/// Number of cross-validation folds.
pub const FOLDS: usize = 3;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("default fold plan needs exactly {FOLDS} publishers per orientation: {0}")]
    UnbalancedPublishers(String),
    #[error("invalid fold plan: {0}")]
    InvalidPlan(String),
    #[error("invalid corpus: {0}")]
    InvalidCorpus(String),
    #[error("gold and predicted labels differ in length ({gold} vs {predicted})")]
    LengthMismatch { gold: usize, predicted: usize },
    #[error("cannot evaluate an empty label sequence")]
    EmptyInput,
    #[error("invalid experiment configuration: {0}")]
    InvalidConfig(String),
    #[error("a lexicon is required for {0} masking")]
    MissingLexicon(MaskMode),
    #[error("sweep grid is empty")]
    EmptyGrid,
    #[error("fold {fold}: {source}")]
    Features {
        fold: usize,
        #[source]
        source: FeatureError,
    },
    #[error("fold {fold}: {source}")]
    Model {
        fold: usize,
        #[source]
        source: ModelError,
    },
    #[error("{path}: {message}")]
    PlanFile { path: String, message: String },
}

// ---------------------------------------------------------------------------
// Fold plans

/// Test publishers of one fold, one per orientation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub left: String,
    pub mainstream: String,
    pub right: String,
}

impl Fold {
    pub fn publisher(&self, orientation: Orientation) -> &str {
        match orientation {
            Orientation::Left => &self.left,
            Orientation::Mainstream => &self.mainstream,
            Orientation::Right => &self.right,
        }
    }

    pub fn publishers(&self) -> [&str; 3] {
        [&self.left, &self.mainstream, &self.right]
    }

    pub fn contains(&self, publisher: &str) -> bool {
        self.publishers().contains(&publisher)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub folds: Vec<Fold>,
}

impl FoldPlan {
    /// Reads a plan from JSON: `{"folds": [{"left": .., "mainstream": .., "right": ..}, ..]}`.
    pub fn load(path: impl AsRef<Path>) -> Result<FoldPlan, EvalError> {
        let path = path.as_ref();
        let err = |message: String| EvalError::PlanFile { path: path.display().to_string(), message };
        let content = std::fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
        serde_json::from_str(&content).map_err(|e| err(e.to_string()))
    }

    /// Checks the plan partitions the corpus publishers into
    /// [`FOLDS`] folds with one publisher of each orientation per fold.
    pub fn validate(&self, corpus: &Corpus) -> Result<(), EvalError> {
        let orientations = publisher_orientations(corpus).map_err(EvalError::InvalidCorpus)?;
        if self.folds.len() != FOLDS {
            return Err(EvalError::InvalidPlan(format!("expected {FOLDS} folds, found {}", self.folds.len())));
        }
        let mut seen: HashSet<&str> = HashSet::new();
        for (i, fold) in self.folds.iter().enumerate() {
            for orientation in Orientation::ALL {
                let publisher = fold.publisher(orientation);
                if !seen.insert(publisher) {
                    return Err(EvalError::InvalidPlan(format!(
                        "publisher {publisher:?} appears in more than one slot"
                    )));
                }
                match orientations.get(publisher) {
                    None => {
                        return Err(EvalError::InvalidPlan(format!(
                            "fold {i}: publisher {publisher:?} has no articles in the corpus"
                        )))
                    }
                    Some(&actual) if actual != orientation => {
                        return Err(EvalError::InvalidPlan(format!(
                            "fold {i}: publisher {publisher:?} is {actual}, not {orientation}"
                        )))
                    }
                    _ => {}
                }
            }
        }
        let missing: Vec<&String> = orientations.keys().filter(|p| !seen.contains(p.as_str())).collect();
        if !missing.is_empty() {
            return Err(EvalError::InvalidPlan(format!("publishers not assigned to any fold: {missing:?}")));
        }
        Ok(())
    }
}

/// Returns the explicit plan after validation, or the default plan:
/// publishers sorted by name within each orientation, the i-th of each
/// orientation tested in fold i.
pub fn make_publisher_folds(corpus: &Corpus, plan: Option<&FoldPlan>) -> Result<FoldPlan, EvalError> {
    if let Some(plan) = plan {
        plan.validate(corpus)?;
        return Ok(plan.clone());
    }
    let orientations = publisher_orientations(corpus).map_err(EvalError::InvalidCorpus)?;
    let mut grouped: BTreeMap<Orientation, Vec<String>> = Orientation::ALL.iter().map(|&o| (o, Vec::new())).collect();
    // BTreeMap iteration is already alphabetical
    for (publisher, orientation) in orientations {
        grouped.get_mut(&orientation).expect("all orientations present").push(publisher);
    }
    let counts: Vec<String> = grouped.iter().map(|(o, p)| format!("{o}={}", p.len())).collect();
    if grouped.values().any(|p| p.len() != FOLDS) {
        return Err(EvalError::UnbalancedPublishers(counts.join(", ")));
    }
    let folds = (0..FOLDS)
        .map(|i| Fold {
            left: grouped[&Orientation::Left][i].clone(),
            mainstream: grouped[&Orientation::Mainstream][i].clone(),
            right: grouped[&Orientation::Right][i].clone(),
        })
        .collect();
    Ok(FoldPlan { folds })
}

// ---------------------------------------------------------------------------
// Oversampling

/// Deterministic seed for one fold and purpose, derived from the run seed.
pub fn derive_seed(seed: u64, fold: usize, purpose: u64) -> u64 {
    fn splitmix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    splitmix(seed ^ splitmix((fold as u64) << 8 | purpose))
}

const OVERSAMPLE_STREAM: u64 = 1;
const SVM_STREAM: u64 = 2;

/// Indices of the balanced row sequence: every original row in order,
/// followed by random duplicates of each minority label (in label order)
/// until each present label matches the majority count.
pub fn oversample_indices(labels: &[Orientation], seed: u64) -> Vec<usize> {
    let mut by_label: [Vec<usize>; 3] = Default::default();
    for (i, label) in labels.iter().enumerate() {
        by_label[label.index()].push(i);
    }
    let target = by_label.iter().map(Vec::len).max().unwrap_or(0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out: Vec<usize> = (0..labels.len()).collect();
    for members in &by_label {
        if members.is_empty() {
            continue;
        }
        for _ in members.len()..target {
            out.push(members[rng.gen_range(0..members.len())]);
        }
    }
    out
}

/// Balances `rows` by duplicating minority-label rows; see [`oversample_indices`].
pub fn oversample<T: Clone>(rows: &[T], label_of: impl Fn(&T) -> Orientation, seed: u64) -> Vec<T> {
    let labels: Vec<Orientation> = rows.iter().map(label_of).collect();
    oversample_indices(&labels, seed).into_iter().map(|i| rows[i].clone()).collect()
}

// ---------------------------------------------------------------------------
// Metrics

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub labels: [Orientation; 3],
    /// `confusion[gold][predicted]` in label order.
    pub confusion: [[usize; 3]; 3],
    pub per_label: BTreeMap<Orientation, LabelMetrics>,
    pub accuracy: f64,
    pub macro_f1: f64,
    pub total: usize,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl EvalReport {
    pub fn from_confusion(confusion: [[usize; 3]; 3]) -> EvalReport {
        let total: usize = confusion.iter().flatten().sum();
        let correct: usize = (0..3).map(|i| confusion[i][i]).sum();
        let per_label: BTreeMap<Orientation, LabelMetrics> = Orientation::ALL
            .iter()
            .map(|&label| {
                let l = label.index();
                let tp = confusion[l][l];
                let gold: usize = confusion[l].iter().sum();
                let predicted: usize = (0..3).map(|g| confusion[g][l]).sum();
                let precision = ratio(tp, predicted);
                let recall = ratio(tp, gold);
                let f1 = if precision + recall == 0.0 { 0.0 } else { 2.0 * precision * recall / (precision + recall) };
                (label, LabelMetrics { precision, recall, f1, support: gold })
            })
            .collect();
        let macro_f1 = per_label.values().map(|m| m.f1).sum::<f64>() / 3.0;
        EvalReport { labels: Orientation::ALL, confusion, per_label, accuracy: ratio(correct, total), macro_f1, total }
    }
}

pub fn evaluate(gold: &[Orientation], predicted: &[Orientation]) -> Result<EvalReport, EvalError> {
    if gold.len() != predicted.len() {
        return Err(EvalError::LengthMismatch { gold: gold.len(), predicted: predicted.len() });
    }
    if gold.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let mut confusion = [[0usize; 3]; 3];
    for (g, p) in gold.iter().zip(predicted) {
        confusion[g.index()][p.index()] += 1;
    }
    Ok(EvalReport::from_confusion(confusion))
}

// ---------------------------------------------------------------------------
// Experiments

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub mode: MaskMode,
    pub k: usize,
    pub n: usize,
    pub classifier: ClassifierKind,
    pub pruning: PruningConfig,
    pub oversample: bool,
    pub seed: u64,
    pub l2_normalize: bool,
    pub nb_alpha: f64,
    pub svm_lambda: f64,
    pub svm_epochs: usize,
    /// Features listed per label in the feature report.
    pub top_features: usize,
    /// Report features of every fold instead of only the last one.
    pub all_fold_features: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let svm = SvmHyperparameters::default();
        ExperimentConfig {
            mode: MaskMode::TopicModel,
            k: 500,
            n: 5,
            classifier: ClassifierKind::Svm,
            pruning: PruningConfig::NONE,
            oversample: true,
            seed: 0,
            l2_normalize: false,
            nb_alpha: 1.0,
            svm_lambda: svm.lambda,
            svm_epochs: svm.epochs,
            top_features: 5,
            all_fold_features: false,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), EvalError> {
        let bad = |m: &str| Err(EvalError::InvalidConfig(m.to_owned()));
        if self.k == 0 {
            return bad("k must be at least 1");
        }
        if self.n == 0 {
            return bad("n must be at least 1");
        }
        if let Err(e) = self.pruning.validate() {
            return Err(EvalError::InvalidConfig(e.to_string()));
        }
        if !(self.nb_alpha >= 0.0 && self.nb_alpha.is_finite()) {
            return bad("nb_alpha must be finite and non-negative");
        }
        if !(self.svm_lambda > 0.0 && self.svm_lambda.is_finite()) {
            return bad("svm_lambda must be positive");
        }
        if self.svm_epochs == 0 {
            return bad("svm_epochs must be at least 1");
        }
        Ok(())
    }
}

/// Vectorized train and test sets of one fold, before oversampling.
#[derive(Debug, Clone)]
pub struct FoldData {
    pub vocab: NgramVocabulary,
    pub train: LabeledDataset,
    pub test: LabeledDataset,
    pub train_ids: Vec<String>,
    pub test_ids: Vec<String>,
}

/// Splits an already-masked corpus by the fold's test publishers and
/// vectorizes both sides with a vocabulary built from training text only.
pub fn prepare_fold(
    masked: &Corpus,
    fold: &Fold,
    config: &ExperimentConfig,
    fold_index: usize,
) -> Result<FoldData, EvalError> {
    let (test_articles, train_articles): (Vec<_>, Vec<_>) = masked.iter().partition(|a| fold.contains(&a.publisher));
    let train_texts: Vec<&str> = train_articles.iter().map(|a| a.text.as_str()).collect();
    let vocab = build_vocabulary(&train_texts, config.n, config.pruning)
        .map_err(|source| EvalError::Features { fold: fold_index, source })?;

    let to_dataset = |articles: &[&crate::corpus::Article]| {
        let mut ds = LabeledDataset::new(vocab.len());
        for a in articles {
            let v = vectorize(&a.text, &vocab);
            let v = if config.l2_normalize { v.l2_normalized() } else { v };
            ds.push(v, a.orientation, a.publisher.clone());
        }
        ds
    };
    let train = to_dataset(&train_articles);
    let test = to_dataset(&test_articles);
    Ok(FoldData {
        train,
        test,
        train_ids: train_articles.iter().map(|a| a.id.clone()).collect(),
        test_ids: test_articles.iter().map(|a| a.id.clone()).collect(),
        vocab,
    })
}

pub fn train_model(train: &LabeledDataset, config: &ExperimentConfig, fold_index: usize) -> Result<Model, EvalError> {
    let model = match config.classifier {
        ClassifierKind::Nb => train_nb(train, config.nb_alpha).map(Model::Nb),
        ClassifierKind::Svm => {
            let hyper = SvmHyperparameters {
                lambda: config.svm_lambda,
                epochs: config.svm_epochs,
                seed: derive_seed(config.seed, fold_index, SVM_STREAM),
            };
            train_svm(train, hyper).map(Model::Svm)
        }
    };
    model.map_err(|source| EvalError::Model { fold: fold_index, source })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub id: String,
    pub publisher: String,
    pub gold: Orientation,
    pub predicted: Orientation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub test_publishers: Fold,
    pub vocab_size: usize,
    pub train_rows: usize,
    pub train_rows_oversampled: usize,
    pub test_rows: usize,
    pub report: EvalReport,
    pub predictions: Vec<PredictionRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldFeatures {
    pub fold: usize,
    pub report: FeatureReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub seed: u64,
    pub folds: Vec<FoldResult>,
    /// Metrics over the pooled test predictions of all folds.
    pub aggregate: EvalReport,
    /// Arithmetic mean of the per-fold macro F1 values.
    pub fold_mean_macro_f1: f64,
    pub features: Vec<FoldFeatures>,
}

/// Runs the full pipeline with the default fold plan.
pub fn run_experiment(
    corpus: &Corpus,
    lexicon: &FrequencyLexicon,
    config: &ExperimentConfig,
) -> Result<ExperimentResult, EvalError> {
    let plan = make_publisher_folds(corpus, None)?;
    run_experiment_with(corpus, Some(lexicon), &plan, config)
}

/// Runs the full pipeline with an explicit plan. The lexicon may be
/// omitted for identity masking.
pub fn run_experiment_with(
    corpus: &Corpus,
    lexicon: Option<&FrequencyLexicon>,
    plan: &FoldPlan,
    config: &ExperimentConfig,
) -> Result<ExperimentResult, EvalError> {
    config.validate()?;
    plan.validate(corpus)?;
    let masked = match (config.mode, lexicon) {
        (MaskMode::Identity, _) => corpus.clone(),
        (mode, Some(lexicon)) => mask_corpus(corpus, &top_k(lexicon, config.k), mode),
        (mode, None) => return Err(EvalError::MissingLexicon(mode)),
    };

    let outputs: Vec<(FoldResult, FeatureReport)> = plan
        .folds
        .par_iter()
        .enumerate()
        .map(|(i, fold)| run_fold(&masked, fold, config, i))
        .collect::<Result<_, _>>()?;

    let mut pooled = [[0usize; 3]; 3];
    for (result, _) in &outputs {
        for (g, row) in result.report.confusion.iter().enumerate() {
            for (p, count) in row.iter().enumerate() {
                pooled[g][p] += count;
            }
        }
    }
    let fold_mean_macro_f1 = outputs.iter().map(|(r, _)| r.report.macro_f1).sum::<f64>() / outputs.len() as f64;

    let last = outputs.len() - 1;
    let mut folds = Vec::with_capacity(outputs.len());
    let mut features = Vec::new();
    for (i, (result, report)) in outputs.into_iter().enumerate() {
        if config.all_fold_features || i == last {
            features.push(FoldFeatures { fold: i, report });
        }
        folds.push(result);
    }

    Ok(ExperimentResult {
        config: config.clone(),
        seed: config.seed,
        folds,
        aggregate: EvalReport::from_confusion(pooled),
        fold_mean_macro_f1,
        features,
    })
}

fn run_fold(
    masked: &Corpus,
    fold: &Fold,
    config: &ExperimentConfig,
    index: usize,
) -> Result<(FoldResult, FeatureReport), EvalError> {
    let data = prepare_fold(masked, fold, config, index)?;
    let train_rows = data.train.len();
    let train = if config.oversample {
        let labels: Vec<Orientation> = data.train.rows.iter().map(|r| r.label).collect();
        let picks = oversample_indices(&labels, derive_seed(config.seed, index, OVERSAMPLE_STREAM));
        LabeledDataset { dim: data.train.dim, rows: picks.into_iter().map(|i| data.train.rows[i].clone()).collect() }
    } else {
        data.train
    };
    let model = train_model(&train, config, index)?;

    let mut predictions = Vec::with_capacity(data.test.len());
    for (row, id) in data.test.rows.iter().zip(&data.test_ids) {
        predictions.push(PredictionRecord {
            id: id.clone(),
            publisher: row.publisher.clone(),
            gold: row.label,
            predicted: model.predict(&row.vector).label,
        });
    }
    let gold: Vec<Orientation> = predictions.iter().map(|p| p.gold).collect();
    let predicted: Vec<Orientation> = predictions.iter().map(|p| p.predicted).collect();
    let report = evaluate(&gold, &predicted)
        .map_err(|_| EvalError::InvalidPlan(format!("fold {index} has no test articles")))?;
    log::info!("fold {index}: {} train rows, {} test rows, macro F1 {:.4}", train.len(), gold.len(), report.macro_f1);

    let features = model.top_features(&data.vocab, config.top_features);
    let result = FoldResult {
        fold: index,
        test_publishers: fold.clone(),
        vocab_size: data.vocab.len(),
        train_rows,
        train_rows_oversampled: train.len(),
        test_rows: gold.len(),
        report,
        predictions,
    };
    Ok((result, features))
}

/// Writes feature reports as TSV: `fold, label, rank, feature, weight`.
pub fn write_features_tsv<W: Write>(features: &[FoldFeatures], mut out: W) -> io::Result<()> {
    writeln!(out, "fold\tlabel\trank\tfeature\tweight")?;
    for f in features {
        for (label, list) in &f.report.per_label {
            for (rank, fw) in list.iter().enumerate() {
                writeln!(out, "{}\t{}\t{}\t{}\t{:.6}", f.fold, label, rank + 1, escape_ngram(&fw.display), fw.weight)?;
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Sweeps

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub mode: MaskMode,
    pub k: usize,
    pub n: usize,
    pub classifier: ClassifierKind,
    pub per_fold_macro_f1: Vec<f64>,
    pub mean_macro_f1: f64,
    pub pooled_macro_f1: f64,
}

impl SweepRow {
    pub fn from_result(result: &ExperimentResult) -> SweepRow {
        let c = &result.config;
        SweepRow {
            mode: c.mode,
            k: c.k,
            n: c.n,
            classifier: c.classifier,
            per_fold_macro_f1: result.folds.iter().map(|f| f.report.macro_f1).collect(),
            mean_macro_f1: result.fold_mean_macro_f1,
            pooled_macro_f1: result.aggregate.macro_f1,
        }
    }
}

pub fn sweep(
    corpus: &Corpus,
    lexicon: &FrequencyLexicon,
    grid: &[ExperimentConfig],
) -> Result<Vec<SweepRow>, EvalError> {
    let plan = make_publisher_folds(corpus, None)?;
    sweep_with(corpus, Some(lexicon), &plan, grid)
}

pub fn sweep_with(
    corpus: &Corpus,
    lexicon: Option<&FrequencyLexicon>,
    plan: &FoldPlan,
    grid: &[ExperimentConfig],
) -> Result<Vec<SweepRow>, EvalError> {
    if grid.is_empty() {
        return Err(EvalError::EmptyGrid);
    }
    grid.iter()
        .map(|config| {
            let result = run_experiment_with(corpus, lexicon, plan, config)?;
            let row = SweepRow::from_result(&result);
            log::info!(
                "{} k={} n={} {}: mean macro F1 {:.4}",
                row.mode,
                row.k,
                row.n,
                row.classifier,
                row.mean_macro_f1
            );
            Ok(row)
        })
        .collect()
}

/// Writes `mode,k,n,classifier,fold,macro_f1` rows: one per fold, then a
/// `fold=mean` row per configuration.
pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], mut out: W) -> io::Result<()> {
    writeln!(out, "mode,k,n,classifier,fold,macro_f1")?;
    for row in rows {
        let prefix = format!("{},{},{},{}", row.mode, row.k, row.n, row.classifier);
        for (fold, f1) in row.per_fold_macro_f1.iter().enumerate() {
            writeln!(out, "{prefix},{fold},{f1:.6}")?;
        }
        writeln!(out, "{prefix},mean,{:.6}", row.mean_macro_f1)?;
    }
    Ok(())
}

/// Publishers of each fold's training side, for hygiene checks.
pub fn train_publishers(corpus: &Corpus, fold: &Fold) -> BTreeSet<String> {
    corpus.iter().filter(|a| !fold.contains(&a.publisher)).map(|a| a.publisher.clone()).collect()
}
