//! Seeded generator of small labeled corpora with a known style/topic split.
//!
//! All three orientations draw function words from one shared Zipf-like
//! distribution, while content words come partly from a label-specific
//! lexicon (disjoint across labels) and otherwise from a shared neutral
//! pool. Masking content words therefore removes nearly all label signal,
//! and masking function words keeps it.

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Article, Corpus, Orientation};
use crate::lexicon::FrequencyLexicon;

/// Function words shared by every label, most frequent first.
pub const FUNCTION_WORDS: [&str; 40] = [
    "the", "of", "and", "to", "a", "in", "that", "is", "was", "it", "for", "on", "with", "he", "as", "you", "at", "be",
    "this", "have", "from", "by", "they", "we", "but", "not", "what", "all", "were", "when", "there", "can", "an",
    "which", "their", "if", "do", "will", "so", "about",
];

const ONSETS: [&str; 16] = ["b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "br", "st"];
const NUCLEI: [&str; 5] = ["a", "e", "i", "o", "u"];
const CODAS: [&str; 6] = ["", "n", "r", "l", "x", "sk"];

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub seed: u64,
    /// Articles per publisher, by orientation.
    pub docs_per_publisher: [usize; 3],
    pub words_per_doc: usize,
    /// Probability that a token is a content word rather than a function word.
    pub content_share: f64,
    /// Probability that a content word comes from the label's own lexicon.
    pub topical_share: f64,
    pub content_words_per_label: usize,
    pub neutral_words: usize,
    pub signature_words_per_publisher: usize,
    /// Insert occasional numeric tokens.
    pub numbers: bool,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            seed: 7,
            docs_per_publisher: [8, 20, 12],
            words_per_doc: 60,
            content_share: 0.5,
            topical_share: 0.5,
            content_words_per_label: 40,
            neutral_words: 60,
            signature_words_per_publisher: 3,
            numbers: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub corpus: Corpus,
    /// Function words only, in rank order.
    pub function_lexicon: FrequencyLexicon,
    /// Every word the generator can emit, function words first.
    pub full_lexicon: FrequencyLexicon,
    pub topical_words: [Vec<String>; 3],
}

/// Distinct lowercase pseudo-words that never collide with function words.
fn pseudo_words(count: usize, rng: &mut ChaCha8Rng, taken: &mut std::collections::HashSet<String>) -> Vec<String> {
    let mut words = Vec::with_capacity(count);
    while words.len() < count {
        let syllables = rng.gen_range(2..=3);
        let mut w = String::new();
        for _ in 0..syllables {
            w.push_str(ONSETS[rng.gen_range(0..ONSETS.len())]);
            w.push_str(NUCLEI[rng.gen_range(0..NUCLEI.len())]);
        }
        w.push_str(CODAS[rng.gen_range(0..CODAS.len())]);
        if taken.insert(w.clone()) {
            words.push(w);
        }
    }
    words
}

fn zipf(n: usize) -> WeightedIndex<f64> {
    WeightedIndex::new((1..=n).map(|r| 1.0 / r as f64)).expect("nonempty weights")
}

pub fn generate(config: &SyntheticConfig) -> SyntheticCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut taken: std::collections::HashSet<String> = FUNCTION_WORDS.iter().map(|w| w.to_string()).collect();

    let topical: [Vec<String>; 3] = [
        pseudo_words(config.content_words_per_label, &mut rng, &mut taken),
        pseudo_words(config.content_words_per_label, &mut rng, &mut taken),
        pseudo_words(config.content_words_per_label, &mut rng, &mut taken),
    ];
    let neutral = pseudo_words(config.neutral_words, &mut rng, &mut taken);
    let mut publishers: Vec<(String, Orientation, Vec<String>)> = Vec::new();
    for orientation in Orientation::ALL {
        for name in ["alpha", "beta", "gamma"] {
            let signature = pseudo_words(config.signature_words_per_publisher, &mut rng, &mut taken);
            publishers.push((format!("{orientation}-{name}"), orientation, signature));
        }
    }

    let function_dist = zipf(FUNCTION_WORDS.len());
    let topical_dist = zipf(config.content_words_per_label.max(1));
    let neutral_dist = zipf(config.neutral_words.max(1));

    let mut articles = Vec::new();
    for (publisher, orientation, signature) in &publishers {
        for d in 0..config.docs_per_publisher[orientation.index()] {
            let mut words: Vec<String> = Vec::with_capacity(config.words_per_doc);
            for _ in 0..config.words_per_doc {
                let word = if !rng.gen_bool(config.content_share) {
                    FUNCTION_WORDS[function_dist.sample(&mut rng)].to_string()
                } else if config.numbers && rng.gen_bool(0.05) {
                    rng.gen_range(1..2030).to_string()
                } else if !signature.is_empty() && rng.gen_bool(0.05) {
                    signature[rng.gen_range(0..signature.len())].clone()
                } else if config.content_words_per_label > 0 && rng.gen_bool(config.topical_share) {
                    topical[orientation.index()][topical_dist.sample(&mut rng)].clone()
                } else {
                    neutral[neutral_dist.sample(&mut rng)].clone()
                };
                words.push(word);
            }
            articles.push(Article {
                id: format!("{publisher}-{d:03}"),
                publisher: publisher.clone(),
                orientation: *orientation,
                title: None,
                text: render(&words, &mut rng),
            });
        }
    }

    let function_lexicon = FrequencyLexicon::from_words(FUNCTION_WORDS).expect("function words are distinct");
    let mut all: Vec<String> = FUNCTION_WORDS.iter().map(|w| w.to_string()).collect();
    all.extend(topical.iter().flatten().cloned());
    all.extend(neutral);
    all.extend(publishers.into_iter().flat_map(|(_, _, sig)| sig));
    let full_lexicon = FrequencyLexicon::from_words(&all).expect("generated words are distinct");

    SyntheticCorpus {
        corpus: Corpus::from_articles(articles).expect("generated ids are distinct"),
        function_lexicon,
        full_lexicon,
        topical_words: topical,
    }
}

/// Joins words into sentences of 6 to 12 words, capitalizing each
/// sentence start and ending with a period.
fn render(words: &[String], rng: &mut ChaCha8Rng) -> String {
    let mut text = String::new();
    let mut remaining = 0;
    for (i, w) in words.iter().enumerate() {
        if remaining == 0 {
            if i > 0 {
                text.push_str(". ");
            }
            remaining = rng.gen_range(6..=12);
            let mut chars = w.chars();
            if let Some(first) = chars.next() {
                text.extend(first.to_uppercase());
                text.push_str(chars.as_str());
            }
        } else {
            text.push_str(if rng.gen_bool(0.1) { ", " } else { " " });
            text.push_str(w);
        }
        remaining -= 1;
    }
    if !words.is_empty() {
        text.push('.');
    }
    text
}
