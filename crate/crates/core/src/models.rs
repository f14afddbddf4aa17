//! Multinomial Naive Bayes and one-vs-rest linear SVM over sparse tf vectors.
//!
//! Both classifiers score the three orientations and predict the argmax,
//! breaking ties in the fixed order `left < mainstream < right`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Orientation;
use crate::features::{LabeledDataset, NgramVocabulary, SparseVector};

/// Version tag written into serialized models.
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("training set is empty")]
    EmptyDataset,
    #[error("no training rows labeled {0}")]
    MissingLabel(Orientation),
    #[error("invalid hyperparameter: {0}")]
    InvalidHyperparameter(String),
    #[error("unsupported model format version {0}")]
    UnsupportedVersion(u32),
    #[error("malformed model: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassifierKind {
    Nb,
    Svm,
}

impl ClassifierKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ClassifierKind::Nb => "nb",
            ClassifierKind::Svm => "svm",
        }
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ClassifierKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "nb" => Ok(ClassifierKind::Nb),
            "svm" => Ok(ClassifierKind::Svm),
            other => Err(format!("unknown classifier {other:?} (expected nb or svm)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub label: Orientation,
    /// Log scores (NB) or margins (SVM), indexed by [`Orientation::index`].
    pub scores: [f64; 3],
}

/// Index of the largest score; the first maximum wins.
pub fn argmax_label(scores: &[f64; 3]) -> Orientation {
    let mut best = 0;
    for i in 1..3 {
        if scores[i] > scores[best] {
            best = i;
        }
    }
    Orientation::ALL[best]
}

pub trait Classifier {
    fn kind(&self) -> ClassifierKind;

    fn dim(&self) -> usize;

    fn scores(&self, x: &SparseVector) -> [f64; 3];

    fn predict(&self, x: &SparseVector) -> Prediction {
        let scores = self.scores(x);
        Prediction { label: argmax_label(&scores), scores }
    }

    /// Per-label relevance of every feature column, used for feature reports.
    fn feature_weights(&self, label: Orientation) -> Vec<f64>;

    fn top_features(&self, vocab: &NgramVocabulary, m: usize) -> FeatureReport {
        assert_eq!(vocab.len(), self.dim(), "vocabulary does not match model dimension");
        let per_label = Orientation::ALL
            .iter()
            .map(|&label| {
                let weights = self.feature_weights(label);
                let mut order: Vec<usize> = (0..weights.len()).collect();
                order.sort_by(|&a, &b| weights[b].total_cmp(&weights[a]).then(a.cmp(&b)));
                let top =
                    order.into_iter().take(m).map(|col| FeatureWeight::new(vocab.term(col), weights[col])).collect();
                (label, top)
            })
            .collect();
        FeatureReport { per_label }
    }
}

fn check_labels(dataset: &LabeledDataset) -> Result<[usize; 3], ModelError> {
    if dataset.is_empty() {
        return Err(ModelError::EmptyDataset);
    }
    let counts = dataset.label_counts();
    for label in Orientation::ALL {
        if counts[label.index()] == 0 {
            return Err(ModelError::MissingLabel(label));
        }
    }
    Ok(counts)
}

// ---------------------------------------------------------------------------
// Naive Bayes

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "NbRepr", try_from = "NbRepr")]
pub struct NbModel {
    alpha: f64,
    dim: usize,
    class_counts: [usize; 3],
    feature_counts: Vec<Vec<f64>>,
    log_prior: [f64; 3],
    log_likelihood: Vec<Vec<f64>>,
}

impl NbModel {
    fn from_counts(alpha: f64, dim: usize, class_counts: [usize; 3], feature_counts: Vec<Vec<f64>>) -> Self {
        let total: usize = class_counts.iter().sum();
        let log_prior = class_counts.map(|c| (c as f64 / total as f64).ln());
        let log_likelihood = feature_counts
            .iter()
            .map(|counts| {
                let denom = counts.iter().sum::<f64>() + alpha * dim as f64;
                counts
                    .iter()
                    .map(|&c| {
                        let num = c + alpha;
                        if num == 0.0 {
                            f64::NEG_INFINITY
                        } else {
                            (num / denom).ln()
                        }
                    })
                    .collect()
            })
            .collect();
        NbModel { alpha, dim, class_counts, feature_counts, log_prior, log_likelihood }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn log_prior(&self) -> [f64; 3] {
        self.log_prior
    }

    pub fn log_likelihood(&self, label: Orientation) -> &[f64] {
        &self.log_likelihood[label.index()]
    }
}

/// Fits multinomial NB with additive smoothing `alpha`.
pub fn train_nb(dataset: &LabeledDataset, alpha: f64) -> Result<NbModel, ModelError> {
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(ModelError::InvalidHyperparameter(format!("alpha must be finite and >= 0, got {alpha}")));
    }
    let class_counts = check_labels(dataset)?;
    let mut feature_counts = vec![vec![0.0; dataset.dim]; 3];
    for row in &dataset.rows {
        let counts = &mut feature_counts[row.label.index()];
        for (i, v) in row.vector.iter() {
            counts[i] += v;
        }
    }
    Ok(NbModel::from_counts(alpha, dataset.dim, class_counts, feature_counts))
}

pub fn predict_nb(model: &NbModel, x: &SparseVector) -> Prediction {
    model.predict(x)
}

impl Classifier for NbModel {
    fn kind(&self) -> ClassifierKind {
        ClassifierKind::Nb
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn scores(&self, x: &SparseVector) -> [f64; 3] {
        let mut scores = self.log_prior;
        for (label, score) in scores.iter_mut().enumerate() {
            let ll = &self.log_likelihood[label];
            for (i, tf) in x.iter() {
                *score += tf * ll[i];
            }
        }
        scores
    }

    fn feature_weights(&self, label: Orientation) -> Vec<f64> {
        let own = &self.log_likelihood[label.index()];
        let others: Vec<&Vec<f64>> =
            Orientation::ALL.iter().filter(|&&l| l != label).map(|l| &self.log_likelihood[l.index()]).collect();
        (0..self.dim)
            .map(|f| {
                let gap = own[f] - others.iter().map(|o| o[f]).fold(f64::NEG_INFINITY, f64::max);
                // -inf - -inf with unsmoothed counts
                if gap.is_nan() {
                    f64::NEG_INFINITY
                } else {
                    gap
                }
            })
            .collect()
    }
}

#[derive(Serialize, Deserialize)]
struct NbRepr {
    format_version: u32,
    kind: ClassifierKind,
    labels: [Orientation; 3],
    alpha: f64,
    dim: usize,
    class_counts: [usize; 3],
    /// Per-label summed tf, sparse.
    feature_counts: Vec<SparseWeights>,
}

#[derive(Serialize, Deserialize)]
struct SparseWeights {
    label: Orientation,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseWeights {
    fn encode(label: Orientation, dense: &[f64]) -> Self {
        let (indices, values) = dense.iter().enumerate().filter(|(_, &v)| v != 0.0).map(|(i, &v)| (i, v)).unzip();
        SparseWeights { label, indices, values }
    }

    fn decode(&self, dim: usize) -> Result<Vec<f64>, ModelError> {
        if self.indices.len() != self.values.len() {
            return Err(ModelError::Malformed("indices and values differ in length".into()));
        }
        let mut dense = vec![0.0; dim];
        for (&i, &v) in self.indices.iter().zip(&self.values) {
            *dense
                .get_mut(i)
                .ok_or_else(|| ModelError::Malformed(format!("index {i} out of range for dimension {dim}")))? = v;
        }
        Ok(dense)
    }
}

fn decode_per_label(entries: &[SparseWeights], dim: usize) -> Result<Vec<Vec<f64>>, ModelError> {
    if entries.len() != 3 {
        return Err(ModelError::Malformed(format!("expected 3 label blocks, found {}", entries.len())));
    }
    Orientation::ALL
        .iter()
        .map(|&label| {
            entries
                .iter()
                .find(|e| e.label == label)
                .ok_or_else(|| ModelError::Malformed(format!("missing block for {label}")))?
                .decode(dim)
        })
        .collect()
}

impl From<NbModel> for NbRepr {
    fn from(m: NbModel) -> Self {
        NbRepr {
            format_version: MODEL_FORMAT_VERSION,
            kind: ClassifierKind::Nb,
            labels: Orientation::ALL,
            alpha: m.alpha,
            dim: m.dim,
            class_counts: m.class_counts,
            feature_counts: Orientation::ALL
                .iter()
                .map(|&l| SparseWeights::encode(l, &m.feature_counts[l.index()]))
                .collect(),
        }
    }
}

impl TryFrom<NbRepr> for NbModel {
    type Error = ModelError;

    fn try_from(r: NbRepr) -> Result<Self, Self::Error> {
        if r.format_version != MODEL_FORMAT_VERSION {
            return Err(ModelError::UnsupportedVersion(r.format_version));
        }
        if r.kind != ClassifierKind::Nb || r.labels != Orientation::ALL {
            return Err(ModelError::Malformed("not a naive Bayes model with standard label order".into()));
        }
        let counts = decode_per_label(&r.feature_counts, r.dim)?;
        Ok(NbModel::from_counts(r.alpha, r.dim, r.class_counts, counts))
    }
}

// ---------------------------------------------------------------------------
// Linear SVM

/// Learning-rate schedule identifier recorded with every SVM model.
pub const SVM_SCHEDULE: &str = "inverse-lambda-t";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmHyperparameters {
    pub lambda: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for SvmHyperparameters {
    fn default() -> Self {
        SvmHyperparameters { lambda: 1e-4, epochs: 20, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "SvmRepr", try_from = "SvmRepr")]
pub struct SvmModel {
    hyper: SvmHyperparameters,
    dim: usize,
    weights: Vec<Vec<f64>>,
    bias: [f64; 3],
}

impl SvmModel {
    /// Builds a model from explicit weights, e.g. for testing decision rules.
    pub fn from_parts(hyper: SvmHyperparameters, weights: [Vec<f64>; 3], bias: [f64; 3]) -> Self {
        let dim = weights[0].len();
        assert!(weights.iter().all(|w| w.len() == dim), "weight vectors differ in length");
        SvmModel { hyper, dim, weights: weights.into(), bias }
    }

    pub fn hyperparameters(&self) -> SvmHyperparameters {
        self.hyper
    }

    pub fn weights(&self, label: Orientation) -> &[f64] {
        &self.weights[label.index()]
    }

    pub fn bias(&self, label: Orientation) -> f64 {
        self.bias[label.index()]
    }

    /// Regularized hinge objective of one binary sub-problem
    /// (`label` against the rest), with the bias regularized like a weight.
    pub fn objective(&self, dataset: &LabeledDataset, label: Orientation) -> f64 {
        let w = &self.weights[label.index()];
        let b = self.bias[label.index()];
        binary_objective(w, b, dataset, label, self.hyper.lambda)
    }
}

pub fn binary_objective(w: &[f64], b: f64, dataset: &LabeledDataset, label: Orientation, lambda: f64) -> f64 {
    let reg = 0.5 * lambda * (w.iter().map(|v| v * v).sum::<f64>() + b * b);
    let hinge: f64 = dataset
        .rows
        .iter()
        .map(|row| {
            let y = if row.label == label { 1.0 } else { -1.0 };
            (1.0 - y * (row.vector.dot_dense(w) + b)).max(0.0)
        })
        .sum();
    reg + hinge / dataset.len() as f64
}

/// Trains one binary hinge-loss classifier per label by projected
/// stochastic subgradient descent with step `1 / (lambda * t)`, returning
/// the average iterate of the second half of training rescaled by the
/// factor that minimizes the objective along its direction.
///
/// The bias is handled as an extra weight on a constant feature, so it
/// is regularized and projected with the rest of the weights. All three
/// sub-problems visit rows in the same seeded order.
pub fn train_svm(dataset: &LabeledDataset, hyper: SvmHyperparameters) -> Result<SvmModel, ModelError> {
    if !(hyper.lambda > 0.0 && hyper.lambda.is_finite()) {
        return Err(ModelError::InvalidHyperparameter(format!("lambda must be positive, got {}", hyper.lambda)));
    }
    if hyper.epochs == 0 {
        return Err(ModelError::InvalidHyperparameter("epochs must be at least 1".into()));
    }
    check_labels(dataset)?;

    let mut rng = ChaCha8Rng::seed_from_u64(hyper.seed);
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let schedule: Vec<Vec<usize>> = (0..hyper.epochs)
        .map(|_| {
            order.shuffle(&mut rng);
            order.clone()
        })
        .collect();

    let mut weights = Vec::with_capacity(3);
    let mut bias = [0.0; 3];
    for label in Orientation::ALL {
        let (mut w, mut b) = train_binary(dataset, label, hyper.lambda, &schedule);
        let alpha = best_rescaling(&w, b, dataset, label, hyper.lambda);
        if alpha != 1.0 {
            w.iter_mut().for_each(|x| *x *= alpha);
            b *= alpha;
        }
        weights.push(w);
        bias[label.index()] = b;
    }
    Ok(SvmModel { hyper, dim: dataset.dim, weights, bias })
}

// The iterate is stored as scale * (v, vb) so that the per-step shrinkage
// costs O(1) instead of O(dim). The returned weights are the average of the
// iterates over the second half of all steps, accumulated lazily per
// coordinate: `acc[j]` holds the sum up to the step at which `v[j]` last
// changed, and `mark[j]` the value of the running scale sum at that point.
fn train_binary(dataset: &LabeledDataset, label: Orientation, lambda: f64, schedule: &[Vec<usize>]) -> (Vec<f64>, f64) {
    let dim = dataset.dim;
    // index `dim` is the bias
    let mut v = vec![0.0; dim + 1];
    let mut acc = vec![0.0; dim + 1];
    let mut mark = vec![0.0; dim + 1];
    let mut scale = 1.0;
    let mut v_norm2 = 0.0;
    let mut scale_sum = 0.0;
    let radius = 1.0 / lambda.sqrt();
    let total_steps: u64 = schedule.iter().map(|e| e.len() as u64).sum();
    let average_from = total_steps / 2;
    let mut t = 0u64;

    let flush = |j: usize, v: &[f64], acc: &mut [f64], mark: &mut [f64], scale_sum: f64| {
        acc[j] += v[j] * (scale_sum - mark[j]);
        mark[j] = scale_sum;
    };

    for epoch in schedule {
        for &i in epoch {
            t += 1;
            let row = &dataset.rows[i];
            let y = if row.label == label { 1.0 } else { -1.0 };
            let raw = row.vector.dot_dense(&v) + v[dim];
            let margin = y * scale * raw;
            let eta = 1.0 / (lambda * t as f64);

            if t == 1 {
                // shrink factor is zero on the first step; the iterate starts at zero anyway
                scale = 1.0;
            } else {
                scale *= 1.0 - 1.0 / t as f64;
            }

            if margin < 1.0 {
                let c = eta * y / scale;
                for (j, x) in row.vector.iter().chain(std::iter::once((dim, 1.0))) {
                    flush(j, &v, &mut acc, &mut mark, scale_sum);
                    v[j] += c * x;
                }
                v_norm2 += 2.0 * c * raw + c * c * (row.vector.squared_norm() + 1.0);
            }

            let norm = scale * v_norm2.max(0.0).sqrt();
            if norm > radius {
                scale *= radius / norm;
            }

            if scale < 1e-9 {
                for j in 0..=dim {
                    flush(j, &v, &mut acc, &mut mark, scale_sum);
                    v[j] *= scale;
                }
                scale = 1.0;
                v_norm2 = v.iter().map(|w| w * w).sum();
            }

            if t > average_from {
                scale_sum += scale;
            }
        }
    }

    let averaged = (total_steps - average_from) as f64;
    for j in 0..=dim {
        flush(j, &v, &mut acc, &mut mark, scale_sum);
        acc[j] /= averaged;
    }
    let bias = acc.pop().expect("bias slot");
    (acc, bias)
}

/// Exact minimizer over `a >= 0` of the binary objective at `a * (w, b)`.
///
/// The objective along this ray is a convex piecewise quadratic
/// `lambda/2 * q * a^2 + mean(max(0, 1 - a * z_i))` with breakpoints at
/// `1 / z_i` for every positive margin `z_i`; the intervals are scanned in
/// order until the stationary point falls inside one.
fn best_rescaling(w: &[f64], b: f64, dataset: &LabeledDataset, label: Orientation, lambda: f64) -> f64 {
    let q = w.iter().map(|x| x * x).sum::<f64>() + b * b;
    if q == 0.0 {
        return 1.0;
    }
    let m = dataset.len() as f64;
    let margins: Vec<f64> = dataset
        .rows
        .iter()
        .map(|row| {
            let y = if row.label == label { 1.0 } else { -1.0 };
            y * (row.vector.dot_dense(w) + b)
        })
        .collect();
    let mut breakpoints: Vec<f64> = margins.iter().filter(|&&z| z > 0.0).map(|z| 1.0 / z).collect();
    breakpoints.sort_by(f64::total_cmp);
    let positive: Vec<f64> = {
        let mut z: Vec<f64> = margins.iter().copied().filter(|&z| z > 0.0).collect();
        z.sort_by(|a, b| b.total_cmp(a));
        z
    };

    // slope of the hinge part is -active_sum / m
    let mut active_sum: f64 = margins.iter().sum();
    let mut lower = 0.0;
    let mut best = f64::INFINITY;
    for (k, &upper) in breakpoints.iter().enumerate() {
        let stationary = active_sum / (m * lambda * q);
        if stationary < upper {
            best = stationary.max(lower);
            break;
        }
        active_sum -= positive[k];
        lower = upper;
    }
    if best.is_infinite() {
        best = (active_sum / (m * lambda * q)).max(lower);
    }

    let objective = |a: f64| 0.5 * lambda * q * a * a + margins.iter().map(|z| (1.0 - a * z).max(0.0)).sum::<f64>() / m;
    // guard against rounding pushing the optimum above the trivial solution
    if objective(best) > objective(0.0) {
        0.0
    } else {
        best
    }
}

pub fn predict_svm(model: &SvmModel, x: &SparseVector) -> Prediction {
    model.predict(x)
}

impl Classifier for SvmModel {
    fn kind(&self) -> ClassifierKind {
        ClassifierKind::Svm
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn scores(&self, x: &SparseVector) -> [f64; 3] {
        let mut scores = self.bias;
        for (label, score) in scores.iter_mut().enumerate() {
            *score += x.dot_dense(&self.weights[label]);
        }
        scores
    }

    fn feature_weights(&self, label: Orientation) -> Vec<f64> {
        self.weights[label.index()].clone()
    }
}

#[derive(Serialize, Deserialize)]
struct SvmRepr {
    format_version: u32,
    kind: ClassifierKind,
    labels: [Orientation; 3],
    schedule: String,
    hyperparameters: SvmHyperparameters,
    dim: usize,
    bias: [f64; 3],
    weights: Vec<SparseWeights>,
}

impl From<SvmModel> for SvmRepr {
    fn from(m: SvmModel) -> Self {
        SvmRepr {
            format_version: MODEL_FORMAT_VERSION,
            kind: ClassifierKind::Svm,
            labels: Orientation::ALL,
            schedule: SVM_SCHEDULE.to_owned(),
            hyperparameters: m.hyper,
            dim: m.dim,
            bias: m.bias,
            weights: Orientation::ALL.iter().map(|&l| SparseWeights::encode(l, &m.weights[l.index()])).collect(),
        }
    }
}

impl TryFrom<SvmRepr> for SvmModel {
    type Error = ModelError;

    fn try_from(r: SvmRepr) -> Result<Self, Self::Error> {
        if r.format_version != MODEL_FORMAT_VERSION {
            return Err(ModelError::UnsupportedVersion(r.format_version));
        }
        if r.kind != ClassifierKind::Svm || r.labels != Orientation::ALL {
            return Err(ModelError::Malformed("not an SVM model with standard label order".into()));
        }
        if r.schedule != SVM_SCHEDULE {
            return Err(ModelError::Malformed(format!("unknown schedule {:?}", r.schedule)));
        }
        let weights = decode_per_label(&r.weights, r.dim)?;
        Ok(SvmModel { hyper: r.hyperparameters, dim: r.dim, weights, bias: r.bias })
    }
}

// ---------------------------------------------------------------------------
// Dispatch and feature reports

/// A trained classifier of either kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Model {
    Nb(NbModel),
    Svm(SvmModel),
}

impl Model {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model serialization cannot fail")
    }

    pub fn from_json(json: &str) -> Result<Model, ModelError> {
        let value: serde_json::Value = serde_json::from_str(json).map_err(|e| ModelError::Malformed(e.to_string()))?;
        match value.get("kind").and_then(|k| k.as_str()) {
            Some("nb") => serde_json::from_value(value).map(Model::Nb),
            Some("svm") => serde_json::from_value(value).map(Model::Svm),
            _ => return Err(ModelError::Malformed("missing or unknown \"kind\"".into())),
        }
        .map_err(|e| ModelError::Malformed(e.to_string()))
    }
}

impl Classifier for Model {
    fn kind(&self) -> ClassifierKind {
        match self {
            Model::Nb(m) => m.kind(),
            Model::Svm(m) => m.kind(),
        }
    }

    fn dim(&self) -> usize {
        match self {
            Model::Nb(m) => m.dim(),
            Model::Svm(m) => m.dim(),
        }
    }

    fn scores(&self, x: &SparseVector) -> [f64; 3] {
        match self {
            Model::Nb(m) => m.scores(x),
            Model::Svm(m) => m.scores(x),
        }
    }

    fn feature_weights(&self, label: Orientation) -> Vec<f64> {
        match self {
            Model::Nb(m) => m.feature_weights(label),
            Model::Svm(m) => m.feature_weights(label),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureWeight {
    pub ngram: String,
    /// The n-gram with every space shown as `_`.
    pub display: String,
    pub weight: f64,
}

impl FeatureWeight {
    pub fn new(ngram: &str, weight: f64) -> Self {
        FeatureWeight { ngram: ngram.to_owned(), display: display_ngram(ngram), weight }
    }
}

pub fn display_ngram(ngram: &str) -> String {
    ngram.replace(' ', "_")
}

/// Highest-weighted features per label, in descending weight order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureReport {
    pub per_label: BTreeMap<Orientation, Vec<FeatureWeight>>,
}

pub fn top_features<C: Classifier + ?Sized>(model: &C, vocab: &NgramVocabulary, m: usize) -> FeatureReport {
    model.top_features(vocab, m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{build_vocabulary, PruningConfig};
    use proptest::prelude::*;
    use Orientation::*;

    fn dataset(dim: usize, rows: &[(&[(usize, f64)], Orientation)]) -> LabeledDataset {
        let mut ds = LabeledDataset::new(dim);
        for (pairs, label) in rows {
            ds.push(SparseVector::from_pairs(pairs.to_vec()), *label, "p");
        }
        ds
    }

    fn sv(pairs: &[(usize, f64)]) -> SparseVector {
        SparseVector::from_pairs(pairs.to_vec())
    }

    #[test]
    fn nb_two_feature_case_matches_closed_form() {
        // feature 0 = "a", feature 1 = "b"; one mainstream row on a third
        // feature keeps every label present without touching a/b counts
        let ds = dataset(3, &[(&[(0, 2.0)], Left), (&[(1, 2.0)], Right), (&[(2, 1.0)], Mainstream)]);
        let model = train_nb(&ds, 1.0).unwrap();
        let p = predict_nb(&model, &sv(&[(0, 1.0)]));
        assert_eq!(p.label, Left);
        // P(a|left) = (2+1)/(2+3), P(a|right) = (0+1)/(2+3), priors 1/3
        let expect_left = (1.0f64 / 3.0).ln() + (3.0f64 / 5.0).ln();
        let expect_right = (1.0f64 / 3.0).ln() + (1.0f64 / 5.0).ln();
        assert!((p.scores[0] - expect_left).abs() < 1e-12);
        assert!((p.scores[2] - expect_right).abs() < 1e-12);
        assert!(p.scores[0] > p.scores[2]);
    }

    #[test]
    fn nb_symmetric_corpus_gives_equal_scores() {
        let ds =
            dataset(3, &[(&[(0, 3.0), (1, 1.0)], Left), (&[(1, 3.0), (0, 1.0)], Right), (&[(2, 2.0)], Mainstream)]);
        let model = train_nb(&ds, 1.0).unwrap();
        let p = predict_nb(&model, &sv(&[(0, 1.0), (1, 1.0)]));
        assert!((p.scores[0] - p.scores[2]).abs() < 1e-12);
        assert_eq!(p.label, Left);
    }

    #[test]
    fn nb_zero_alpha_excludes_label() {
        let ds = dataset(2, &[(&[(0, 1.0)], Left), (&[(1, 1.0)], Mainstream), (&[(0, 1.0), (1, 1.0)], Right)]);
        let model = train_nb(&ds, 0.0).unwrap();
        let p = predict_nb(&model, &sv(&[(1, 1.0)]));
        assert_eq!(p.scores[0], f64::NEG_INFINITY);
        assert!(p.scores[1].is_finite() && p.scores[2].is_finite());
        assert_eq!(p.label, Mainstream);
    }

    #[test]
    fn nb_empty_vector_uses_priors() {
        let balanced = dataset(1, &[(&[(0, 1.0)], Left), (&[(0, 1.0)], Mainstream), (&[(0, 1.0)], Right)]);
        let model = train_nb(&balanced, 1.0).unwrap();
        assert_eq!(predict_nb(&model, &SparseVector::default()).label, Left);

        let skewed =
            dataset(1, &[(&[(0, 1.0)], Left), (&[(0, 1.0)], Mainstream), (&[(0, 1.0)], Right), (&[(0, 1.0)], Right)]);
        let model = train_nb(&skewed, 1.0).unwrap();
        assert_eq!(predict_nb(&model, &SparseVector::default()).label, Right);
    }

    #[test]
    fn nb_distributions_are_normalized() {
        let ds = dataset(4, &[(&[(0, 2.0), (3, 1.0)], Left), (&[(1, 5.0)], Mainstream), (&[(2, 1.0)], Right)]);
        let model = train_nb(&ds, 0.5).unwrap();
        for label in Orientation::ALL {
            let total: f64 = model.log_likelihood(label).iter().map(|l| l.exp()).sum();
            assert!((total - 1.0).abs() < 1e-9);
        }
        let prior: f64 = model.log_prior().iter().map(|l| l.exp()).sum();
        assert!((prior - 1.0).abs() < 1e-9);
    }

    #[test]
    fn missing_label_is_an_error() {
        let ds = dataset(1, &[(&[(0, 1.0)], Left), (&[(0, 1.0)], Right)]);
        assert_eq!(train_nb(&ds, 1.0).unwrap_err(), ModelError::MissingLabel(Mainstream));
        assert_eq!(train_svm(&ds, SvmHyperparameters::default()).unwrap_err(), ModelError::MissingLabel(Mainstream));
        assert_eq!(train_nb(&LabeledDataset::new(1), 1.0).unwrap_err(), ModelError::EmptyDataset);
    }

    fn block_dataset() -> LabeledDataset {
        // each label owns features 3*l..3*l+3, plus a shared feature 9
        let mut ds = LabeledDataset::new(10);
        for (l, label) in Orientation::ALL.iter().enumerate() {
            for d in 0..4 {
                let own = 3 * l + d % 3;
                ds.push(sv(&[(own, 1.0 + d as f64), (9, 2.0)]), *label, "p");
            }
        }
        ds
    }

    #[test]
    fn svm_separates_disjoint_blocks() {
        let ds = block_dataset();
        let model = train_svm(&ds, SvmHyperparameters::default()).unwrap();
        for row in &ds.rows {
            assert_eq!(predict_svm(&model, &row.vector).label, row.label);
        }
    }

    #[test]
    fn svm_is_deterministic() {
        let ds = block_dataset();
        let hyper = SvmHyperparameters { seed: 7, ..Default::default() };
        let a = train_svm(&ds, hyper).unwrap();
        let b = train_svm(&ds, hyper).unwrap();
        for label in Orientation::ALL {
            let bits_a: Vec<u64> = a.weights(label).iter().map(|w| w.to_bits()).collect();
            let bits_b: Vec<u64> = b.weights(label).iter().map(|w| w.to_bits()).collect();
            assert_eq!(bits_a, bits_b);
            assert_eq!(a.bias(label).to_bits(), b.bias(label).to_bits());
        }
    }

    #[test]
    fn svm_identical_rows_predict_constant() {
        let x = [(0, 1.0), (1, 2.0)];
        let ds = dataset(3, &[(&x, Left), (&x, Mainstream), (&x, Right), (&x, Right)]);
        let model = train_svm(&ds, SvmHyperparameters::default()).unwrap();
        let first = predict_svm(&model, &sv(&x)).label;
        for probe in [sv(&[]), sv(&[(2, 5.0)]), sv(&[(0, 3.0), (2, 1.0)])] {
            assert_eq!(predict_svm(&model, &probe).label, first);
        }
    }

    #[test]
    fn svm_decision_rule() {
        let hyper = SvmHyperparameters::default();
        let model = SvmModel::from_parts(hyper, [vec![-1.0, 0.0], vec![-1.0, 0.0], vec![1.0, 0.0]], [0.0; 3]);
        assert_eq!(predict_svm(&model, &sv(&[(0, 1.0)])).label, Right);
        let model = SvmModel::from_parts(hyper, [vec![0.0], vec![0.0], vec![0.0]], [0.1, 0.3, -0.2]);
        assert_eq!(predict_svm(&model, &SparseVector::default()).label, Mainstream);
        let model = SvmModel::from_parts(hyper, [vec![0.0], vec![0.0], vec![0.0]], [0.0; 3]);
        assert_eq!(predict_svm(&model, &SparseVector::default()).label, Left);
    }

    #[test]
    fn top_features_order_display_and_clamp() {
        let vocab = build_vocabulary(&[" imag", "xyzwv"], 5, PruningConfig::NONE).unwrap();
        let col = vocab.get(" imag").unwrap();
        let mut left = vec![0.0; 2];
        left[col] = 5.0;
        let model = SvmModel::from_parts(SvmHyperparameters::default(), [left, vec![0.0; 2], vec![0.0; 2]], [0.0; 3]);
        let report = top_features(&model, &vocab, 1);
        assert_eq!(report.per_label[&Left][0].display, "_imag");
        assert_eq!(report.per_label[&Left][0].ngram, " imag");
        let full = top_features(&model, &vocab, vocab.len() + 10);
        assert!(full.per_label.values().all(|v| v.len() == vocab.len()));
    }

    #[test]
    fn model_json_round_trip_preserves_predictions() {
        let ds = block_dataset();
        let probes: Vec<SparseVector> = ds.rows.iter().map(|r| r.vector.clone()).collect();
        let models = [
            Model::Svm(train_svm(&ds, SvmHyperparameters::default()).unwrap()),
            Model::Nb(train_nb(&ds, 1.0).unwrap()),
        ];
        for model in models {
            let json = model.to_json();
            let back = Model::from_json(&json).unwrap();
            assert_eq!(back, model);
            for p in &probes {
                assert_eq!(back.scores(p).map(f64::to_bits), model.scores(p).map(f64::to_bits));
            }
        }
        assert!(matches!(Model::from_json("{\"kind\":\"rf\"}"), Err(ModelError::Malformed(_))));
    }

    #[test]
    fn model_json_rejects_future_version() {
        let model = Model::Svm(train_svm(&block_dataset(), SvmHyperparameters::default()).unwrap());
        let json = model.to_json().replace("\"format_version\":1", "\"format_version\":99");
        assert!(Model::from_json(&json).is_err());
    }

    fn small_dataset() -> impl Strategy<Value = LabeledDataset> {
        (1usize..6, 3usize..10).prop_flat_map(|(dim, rows)| {
            let row = (proptest::collection::vec((0..dim, 1u8..4), 1..4), 0usize..3);
            proptest::collection::vec(row, rows).prop_map(move |rows| {
                let mut ds = LabeledDataset::new(dim);
                for (i, (pairs, label)) in rows.into_iter().enumerate() {
                    // first three rows cover every label
                    let label = if i < 3 { i } else { label };
                    let pairs = pairs.into_iter().map(|(c, v)| (c, v as f64)).collect();
                    ds.push(SparseVector::from_pairs(pairs), Orientation::ALL[label], "p");
                }
                ds
            })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn svm_objective_not_worse_than_zero(
            ds in small_dataset(),
            seed in 0u64..1000,
            (lambda, epochs) in prop_oneof![Just((1e-4, 20usize)), Just((1e-2, 5)), Just((0.1, 50)), Just((1.0, 1))],
        ) {
            let hyper = SvmHyperparameters { lambda, epochs, seed };
            let model = train_svm(&ds, hyper).unwrap();
            for label in Orientation::ALL {
                let zero = binary_objective(&vec![0.0; ds.dim], 0.0, &ds, label, hyper.lambda);
                let trained = model.objective(&ds, label);
                prop_assert!(trained <= zero + 1e-12, "{label}: {trained} > {zero}");
                prop_assert!(model.weights(label).iter().all(|w| w.is_finite()));
            }
        }

        #[test]
        fn nb_argmax_invariant_to_integer_scaling(
            dim in 1usize..6,
            rows in proptest::collection::vec(proptest::collection::vec((0usize..5, 1u8..4), 1..4), 1..4),
            factor in 2u32..6,
            probe in proptest::collection::vec((0usize..5, 1u8..4), 0..4),
        ) {
            // Holds exactly for unsmoothed likelihoods and equal priors, the
            // situation oversampling produces; with alpha > 0 the smoothed
            // estimates themselves change under rescaling.
            let mut ds = LabeledDataset::new(dim);
            for (r, pairs) in rows.iter().enumerate() {
                for label in Orientation::ALL {
                    let pairs = pairs.iter().map(|&(c, v)| ((c + r + label.index()) % dim, v as f64)).collect();
                    ds.push(SparseVector::from_pairs(pairs), label, "p");
                }
            }
            let model = train_nb(&ds, 0.0).unwrap();
            let mut scaled = ds.clone();
            for row in &mut scaled.rows {
                row.vector = row.vector.scaled(factor as f64);
            }
            let scaled_model = train_nb(&scaled, 0.0).unwrap();
            let x = SparseVector::from_pairs(probe.into_iter().map(|(c, v)| (c % dim, v as f64)).collect());
            let a = predict_nb(&model, &x);
            let b = predict_nb(&scaled_model, &x.scaled(factor as f64));
            let finite: Vec<f64> = a.scores.iter().copied().filter(|s| s.is_finite()).collect();
            let near_tie = finite.iter().enumerate().any(|(i, p)| finite[i + 1..].iter().any(|q| (p - q).abs() < 1e-9));
            prop_assume!(!near_tie);
            prop_assert_eq!(a.label, b.label);
        }
    }
}
