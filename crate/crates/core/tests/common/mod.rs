//! Reference implementations used as test oracles. They favor the most
//! direct formulation over speed; only the comparison helpers call into
//! the library.
#![allow(dead_code)]

use unmask::features::{LabeledDataset, SparseVector};
use unmask::models::train_nb;
use unmask::{Classifier, Orientation};

/// Macro F1 from raw label sequences, with per-label F1 as
/// `2tp / (2tp + fp + fn)` and zero when the label never occurs on
/// either side.
pub fn brute_force_macro_f1(gold: &[Orientation], predicted: &[Orientation]) -> f64 {
    let mut total = 0.0;
    for label in Orientation::ALL {
        let (mut tp, mut fp, mut fn_) = (0u64, 0u64, 0u64);
        for (g, p) in gold.iter().zip(predicted) {
            match (*g == label, *p == label) {
                (true, true) => tp += 1,
                (false, true) => fp += 1,
                (true, false) => fn_ += 1,
                (false, false) => {}
            }
        }
        let denom = 2 * tp + fp + fn_;
        if denom > 0 && tp > 0 {
            total += (2 * tp) as f64 / denom as f64;
        }
    }
    total / 3.0
}

pub fn brute_force_accuracy(gold: &[Orientation], predicted: &[Orientation]) -> f64 {
    let hits = gold.iter().zip(predicted).filter(|(g, p)| g == p).count();
    hits as f64 / gold.len() as f64
}

/// A training document as a bag of word ids with its label.
pub type Doc = (Vec<usize>, Orientation);

/// Multinomial NB posterior computed by expanding every document into its
/// individual token occurrences and multiplying probabilities one token at
/// a time.
pub fn nb_posterior(docs: &[Doc], vocab: usize, alpha: f64, probe: &[usize]) -> [f64; 3] {
    let mut joint = [0.0; 3];
    for label in Orientation::ALL {
        let class_docs: Vec<&Doc> = docs.iter().filter(|(_, l)| *l == label).collect();
        let prior = class_docs.len() as f64 / docs.len() as f64;
        let tokens: Vec<usize> = class_docs.iter().flat_map(|(bag, _)| bag.iter().copied()).collect();
        let mut p = prior;
        for &word in probe {
            let occurrences = tokens.iter().filter(|&&t| t == word).count() as f64;
            p *= (occurrences + alpha) / (tokens.len() as f64 + alpha * vocab as f64);
        }
        joint[label.index()] = p;
    }
    let z: f64 = joint.iter().sum();
    joint.map(|p| p / z)
}

/// Softmax of log-space scores.
pub fn softmax(scores: [f64; 3]) -> [f64; 3] {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exp = scores.map(|s| (s - max).exp());
    let z: f64 = exp.iter().sum();
    exp.map(|e| e / z)
}

/// Character n-gram counts over a list of texts, by sliding a window over
/// each text's chars.
pub fn ngram_counts(texts: &[&str], n: usize) -> std::collections::HashMap<String, u64> {
    let mut counts = std::collections::HashMap::new();
    for text in texts {
        let chars: Vec<char> = text.chars().collect();
        for window in chars.windows(n) {
            *counts.entry(window.iter().collect::<String>()).or_insert(0) += 1;
        }
    }
    counts
}

pub fn bag_to_vector(bag: &[usize]) -> SparseVector {
    SparseVector::from_pairs(bag.iter().map(|&w| (w, 1.0)).collect())
}

/// Compares the trained model's posterior with [`nb_posterior`] on each probe.
pub fn check_nb(docs: &[Doc], vocab: usize, alpha: f64, probes: &[Vec<usize>]) -> Result<(), String> {
    let mut ds = LabeledDataset::new(vocab);
    for (bag, label) in docs {
        ds.push(bag_to_vector(bag), *label, "p");
    }
    let model = train_nb(&ds, alpha).map_err(|e| e.to_string())?;
    for probe in probes {
        let expected = nb_posterior(docs, vocab, alpha, probe);
        let got = softmax(model.scores(&bag_to_vector(probe)));
        for i in 0..3 {
            if (expected[i] - got[i]).abs() > 1e-9 {
                return Err(format!("docs {docs:?} probe {probe:?}: {got:?} vs {expected:?}"));
            }
        }
    }
    Ok(())
}

/// Every count matrix over `vocab` words with entries below `max_count`.
pub fn bags(vocab: usize, max_count: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for word in 0..vocab {
        out = out
            .into_iter()
            .flat_map(|bag: Vec<usize>| {
                (0..max_count).map(move |c| {
                    let mut b = bag.clone();
                    b.extend(std::iter::repeat_n(word, c));
                    b
                })
            })
            .collect();
    }
    out
}

/// Label sequences of length `docs` using all three labels.
pub fn labelings(docs: usize) -> Vec<Vec<Orientation>> {
    let mut out = vec![Vec::new()];
    for _ in 0..docs {
        out = out
            .into_iter()
            .flat_map(|seq: Vec<Orientation>| {
                Orientation::ALL.into_iter().map(move |o| {
                    let mut s = seq.clone();
                    s.push(o);
                    s
                })
            })
            .collect();
    }
    out.retain(|s| Orientation::ALL.iter().all(|o| s.contains(o)));
    out
}

/// Checks every instance with up to `max_vocab` words, 3 or 4 documents,
/// and per-cell counts below `max_count`, probing with every possible bag.
/// Returns the number of instances checked.
pub fn exhaustive_nb(max_vocab: usize, max_count: usize) -> Result<usize, String> {
    let mut checked = 0;
    for vocab in 1..=max_vocab {
        let all_bags = bags(vocab, max_count);
        for docs in 3..=4 {
            for labels in labelings(docs) {
                let mut idx = vec![0usize; docs];
                loop {
                    let instance: Vec<Doc> = idx.iter().zip(&labels).map(|(&b, &l)| (all_bags[b].clone(), l)).collect();
                    check_nb(&instance, vocab, 1.0, &all_bags)?;
                    checked += 1;
                    // odometer over bag choices
                    let mut pos = 0;
                    while pos < docs {
                        idx[pos] += 1;
                        if idx[pos] < all_bags.len() {
                            break;
                        }
                        idx[pos] = 0;
                        pos += 1;
                    }
                    if pos == docs {
                        break;
                    }
                }
            }
        }
    }
    Ok(checked)
}
