//! Masking-based detection of political orientation in news articles.
//!
//! The pipeline runs in five stages:
//!
//! - [`corpus`]: load and clean a labeled JSONL news corpus
//! - [`lexicon`]: load a ranked frequency word list and take its top-k prefix
//! - [`masking`]: replace frequent (or infrequent) words with `*` and numbers with `#`
//! - [`features`]: character n-gram vocabularies and raw term-frequency vectors
//! - [`models`]: multinomial Naive Bayes and one-vs-rest linear SVM
//!
//! [`eval`] ties them together with publisher-grouped cross-validation,
//! random duplicate oversampling, macro-averaged metrics and parameter sweeps.
//!
//! ```
//! use unmask::lexicon::{top_k, FrequencyLexicon};
//! use unmask::masking::{mask_text, MaskMode};
//!
//! let lexicon = FrequencyLexicon::from_words(["the", "of", "and"]).unwrap();
//! let words = top_k(&lexicon, 2);
//! let masked = mask_text("The cost of 3 wars", &words, MaskMode::TopicModel);
//! assert_eq!(masked.text, "* cost * 3 wars");
//! let masked = mask_text("The cost of 3 wars", &words, MaskMode::StyleModel);
//! assert_eq!(masked.text, "The * of # *");
//! ```

pub mod corpus;
pub mod eval;
pub mod features;
pub mod lexicon;
pub mod masking;
pub mod models;
pub mod synthetic;

pub use corpus::{Article, Corpus, Orientation};
pub use eval::{run_experiment, sweep, EvalReport, ExperimentConfig, ExperimentResult};
pub use features::{NgramVocabulary, PruningConfig, SparseVector};
pub use lexicon::{FrequencyLexicon, WordSet};
pub use masking::{masked_token_count, MaskMode, MaskedText};
pub use models::{Classifier, ClassifierKind, FeatureReport, Model};
