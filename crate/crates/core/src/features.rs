//! Character n-gram vocabularies and raw term-frequency vectors.
//!
//! An n-gram is a window of `n` Unicode scalar values over the full text,
//! spaces and mask symbols included.

use std::collections::HashMap;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Orientation;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FeatureError {
    #[error("n-gram length must be at least 1")]
    ZeroLength,
    #[error("pruning removed every n-gram from the vocabulary")]
    EmptyVocabulary,
    #[error("invalid pruning: min_total ({min}) must be below max_total ({max})")]
    InvalidPruning { min: u64, max: u64 },
}

/// Total-frequency cutoffs applied when building a vocabulary.
///
/// An n-gram is kept when `total >= min_total` and `total < max_total`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PruningConfig {
    pub min_total: Option<u64>,
    pub max_total: Option<u64>,
}

impl PruningConfig {
    pub const NONE: PruningConfig = PruningConfig { min_total: None, max_total: None };

    /// Keeps only n-grams seen fewer than 50 times in the training text.
    pub const UNDER_50: PruningConfig = PruningConfig { min_total: None, max_total: Some(50) };

    pub fn validate(&self) -> Result<(), FeatureError> {
        match (self.min_total, self.max_total) {
            (Some(min), Some(max)) if min >= max => Err(FeatureError::InvalidPruning { min, max }),
            _ => Ok(()),
        }
    }

    pub fn keeps(&self, total: u64) -> bool {
        self.min_total.is_none_or(|m| total >= m) && self.max_total.is_none_or(|m| total < m)
    }
}

/// Iterates the character n-grams of `text` as borrowed slices.
pub fn char_ngrams(text: &str, n: usize) -> impl Iterator<Item = &str> + '_ {
    assert!(n >= 1, "n-gram length must be at least 1");
    let mut bounds: Vec<usize> = text.char_indices().map(|(i, _)| i).collect();
    bounds.push(text.len());
    let count = bounds.len().saturating_sub(n);
    (0..count).map(move |i| &text[bounds[i]..bounds[i + n]])
}

/// Counts every character n-gram of `text`.
pub fn extract_char_ngrams(text: &str, n: usize) -> Result<HashMap<String, u64>, FeatureError> {
    if n == 0 {
        return Err(FeatureError::ZeroLength);
    }
    let mut counts: HashMap<String, u64> = HashMap::new();
    for gram in char_ngrams(text, n) {
        *counts.entry(gram.to_owned()).or_default() += 1;
    }
    Ok(counts)
}

/// Column assignment for a fixed n. Column 0 is the most frequent n-gram;
/// ties go to the lexicographically smaller string.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NgramVocabulary {
    n: usize,
    index: HashMap<String, usize>,
    terms: Vec<String>,
    total_freq: Vec<u64>,
    pruning: PruningConfig,
}

impl NgramVocabulary {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn get(&self, ngram: &str) -> Option<usize> {
        self.index.get(ngram).copied()
    }

    pub fn term(&self, column: usize) -> &str {
        &self.terms[column]
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn total_freq(&self, column: usize) -> u64 {
        self.total_freq[column]
    }

    pub fn pruning(&self) -> PruningConfig {
        self.pruning
    }

    /// Writes `ngram<TAB>index<TAB>total_freq` lines with whitespace escaped.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> io::Result<()> {
        for (i, term) in self.terms.iter().enumerate() {
            writeln!(out, "{}\t{}\t{}", escape_ngram(term), i, self.total_freq[i])?;
        }
        Ok(())
    }
}

/// Escapes a backslash, tab, newline, carriage return and space so an
/// n-gram fits in one TSV field.
pub fn escape_ngram(ngram: &str) -> String {
    let mut out = String::with_capacity(ngram.len());
    for c in ngram.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            ' ' => out.push_str("\\s"),
            c => out.push(c),
        }
    }
    out
}

/// Inverse of [`escape_ngram`]; unknown escapes are kept literally.
pub fn unescape_ngram(field: &str) -> String {
    let mut out = String::with_capacity(field.len());
    let mut chars = field.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('\\') => out.push('\\'),
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            Some('s') => out.push(' '),
            Some(other) => {
                out.push('\\');
                out.push(other);
            }
            None => out.push('\\'),
        }
    }
    out
}

pub fn build_vocabulary<S: AsRef<str>>(
    training_texts: &[S],
    n: usize,
    pruning: PruningConfig,
) -> Result<NgramVocabulary, FeatureError> {
    if n == 0 {
        return Err(FeatureError::ZeroLength);
    }
    pruning.validate()?;

    let mut totals: HashMap<&str, u64> = HashMap::new();
    for text in training_texts {
        for gram in char_ngrams(text.as_ref(), n) {
            *totals.entry(gram).or_default() += 1;
        }
    }
    let mut kept: Vec<(&str, u64)> = totals.into_iter().filter(|&(_, c)| pruning.keeps(c)).collect();
    if kept.is_empty() {
        return Err(FeatureError::EmptyVocabulary);
    }
    kept.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));

    let terms: Vec<String> = kept.iter().map(|(g, _)| (*g).to_owned()).collect();
    let total_freq = kept.iter().map(|&(_, c)| c).collect();
    let index = terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
    Ok(NgramVocabulary { n, index, terms, total_freq, pruning })
}

/// Sparse document vector: `(column, weight)` pairs, strictly increasing
/// columns, every weight positive.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SparseVector {
    pairs: Vec<(usize, f64)>,
}

impl SparseVector {
    /// Builds a vector from pairs in any order; repeated columns are summed
    /// and non-positive weights dropped.
    pub fn from_pairs(mut pairs: Vec<(usize, f64)>) -> Self {
        pairs.sort_by_key(|&(i, _)| i);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(pairs.len());
        for (i, v) in pairs {
            match merged.last_mut() {
                Some(last) if last.0 == i => last.1 += v,
                _ => merged.push((i, v)),
            }
        }
        merged.retain(|&(_, v)| v > 0.0);
        SparseVector { pairs: merged }
    }

    pub fn pairs(&self) -> &[(usize, f64)] {
        &self.pairs
    }

    pub fn nnz(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.pairs.iter().copied()
    }

    pub fn sum(&self) -> f64 {
        self.pairs.iter().map(|&(_, v)| v).sum()
    }

    pub fn squared_norm(&self) -> f64 {
        self.pairs.iter().map(|&(_, v)| v * v).sum()
    }

    pub fn dot_dense(&self, dense: &[f64]) -> f64 {
        self.pairs.iter().map(|&(i, v)| dense[i] * v).sum()
    }

    pub fn scaled(&self, factor: f64) -> SparseVector {
        SparseVector::from_pairs(self.pairs.iter().map(|&(i, v)| (i, v * factor)).collect())
    }

    /// Unit-length copy; the empty vector stays empty.
    pub fn l2_normalized(&self) -> SparseVector {
        let norm = self.squared_norm().sqrt();
        if norm == 0.0 {
            return self.clone();
        }
        SparseVector { pairs: self.pairs.iter().map(|&(i, v)| (i, v / norm)).collect() }
    }

    /// Largest column index plus one, or zero for the empty vector.
    pub fn min_dim(&self) -> usize {
        self.pairs.last().map_or(0, |&(i, _)| i + 1)
    }
}

/// Raw counts of each vocabulary n-gram in `text`.
pub fn vectorize(text: &str, vocab: &NgramVocabulary) -> SparseVector {
    let mut counts: HashMap<usize, u64> = HashMap::new();
    for gram in char_ngrams(text, vocab.n) {
        if let Some(col) = vocab.get(gram) {
            *counts.entry(col).or_default() += 1;
        }
    }
    let mut pairs: Vec<(usize, f64)> = counts.into_iter().map(|(i, c)| (i, c as f64)).collect();
    pairs.sort_unstable_by_key(|&(i, _)| i);
    SparseVector { pairs }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledRow {
    pub vector: SparseVector,
    pub label: Orientation,
    pub publisher: String,
}

/// Rows that all refer to the same vocabulary of size `dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub dim: usize,
    pub rows: Vec<LabeledRow>,
}

impl LabeledDataset {
    pub fn new(dim: usize) -> Self {
        LabeledDataset { dim, rows: Vec::new() }
    }

    pub fn push(&mut self, vector: SparseVector, label: Orientation, publisher: impl Into<String>) {
        assert!(vector.min_dim() <= self.dim, "vector exceeds dataset dimension");
        self.rows.push(LabeledRow { vector, label, publisher: publisher.into() });
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn label_counts(&self) -> [usize; 3] {
        let mut counts = [0; 3];
        for row in &self.rows {
            counts[row.label.index()] += 1;
        }
        counts
    }
}
