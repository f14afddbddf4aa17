//! Ranked frequency word lists and their top-k prefixes.

use std::collections::{HashMap, HashSet};
use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("{path}: file not found")]
    MissingFile { path: PathBuf },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: duplicate word {word:?} (first seen on line {first_line})")]
    DuplicateWord { line: usize, first_line: usize, word: String },
    #[error("line {line}: invalid entry {entry:?}")]
    InvalidEntry { line: usize, entry: String },
    #[error("lexicon is empty")]
    EmptyLexicon,
}

/// Lowercased word forms in rank order (index 0 is the most frequent).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrequencyLexicon {
    words: Vec<String>,
}

impl FrequencyLexicon {
    /// Builds a lexicon from words in rank order. Line numbers in errors
    /// are 1-based positions in the input sequence.
    pub fn from_words<I, S>(words: I) -> Result<Self, LexiconError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let entries = words.into_iter().enumerate().map(|(i, w)| (i + 1, w.as_ref().to_owned()));
        Self::from_entries(entries)
    }

    fn from_entries(entries: impl Iterator<Item = (usize, String)>) -> Result<Self, LexiconError> {
        let mut words = Vec::new();
        let mut first_seen: HashMap<String, usize> = HashMap::new();
        for (line, entry) in entries {
            if entry.is_empty() || entry.chars().any(char::is_whitespace) {
                return Err(LexiconError::InvalidEntry { line, entry });
            }
            let word = entry.to_lowercase();
            if let Some(&first_line) = first_seen.get(&word) {
                return Err(LexiconError::DuplicateWord { line, first_line, word });
            }
            first_seen.insert(word.clone(), line);
            words.push(word);
        }
        if words.is_empty() {
            return Err(LexiconError::EmptyLexicon);
        }
        Ok(FrequencyLexicon { words })
    }

    /// Parses the one-word-per-line format. Anything after the first tab
    /// (a frequency count) is ignored; blank lines are skipped.
    pub fn parse(content: &str) -> Result<Self, LexiconError> {
        let entries = content.lines().enumerate().filter_map(|(i, line)| {
            let word = line.split('\t').next().unwrap_or("").trim();
            (!word.is_empty()).then(|| (i + 1, word.to_owned()))
        });
        Self::from_entries(entries)
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// 1-based rank of a word, case-insensitive.
    pub fn rank(&self, word: &str) -> Option<usize> {
        let word = word.to_lowercase();
        self.words.iter().position(|w| *w == word).map(|i| i + 1)
    }
}

pub fn load_lexicon(path: impl AsRef<Path>) -> Result<FrequencyLexicon, LexiconError> {
    let path = path.as_ref();
    let content = std::fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => LexiconError::MissingFile { path: path.to_path_buf() },
        _ => LexiconError::Io { path: path.to_path_buf(), source: e },
    })?;
    FrequencyLexicon::parse(&content)
}

/// The set of the `k` most frequent words.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WordSet {
    members: HashSet<String>,
    k: usize,
    clamped: bool,
}

impl WordSet {
    /// Membership test on an already-lowercased word.
    pub fn contains(&self, lowercase_word: &str) -> bool {
        self.members.contains(lowercase_word)
    }

    pub fn members(&self) -> &HashSet<String> {
        &self.members
    }

    /// The requested prefix length, which may exceed the lexicon size.
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// True when `k` was larger than the lexicon.
    pub fn clamped(&self) -> bool {
        self.clamped
    }
}

pub fn top_k(lexicon: &FrequencyLexicon, k: usize) -> WordSet {
    let clamped = k > lexicon.len();
    if clamped {
        log::warn!("k = {k} exceeds lexicon size {}; using all words", lexicon.len());
    }
    WordSet { members: lexicon.words.iter().take(k).cloned().collect(), k, clamped }
}
