//! Labeled news corpus: JSONL loading, validation and cleaning.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// The sentinel text the default bogus-pattern list contains.
pub const DEFAULT_BOGUS_PATTERN: &str = "The document has moved here";

/// Political orientation of a publisher.
///
/// The derived ordering `Left < Mainstream < Right` is the tie-breaking
/// order used throughout the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    Left,
    Mainstream,
    Right,
}

impl Orientation {
    pub const ALL: [Orientation; 3] = [Orientation::Left, Orientation::Mainstream, Orientation::Right];

    /// Position in [`Orientation::ALL`].
    pub fn index(self) -> usize {
        match self {
            Orientation::Left => 0,
            Orientation::Mainstream => 1,
            Orientation::Right => 2,
        }
    }

    pub fn from_index(index: usize) -> Option<Orientation> {
        Self::ALL.get(index).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Orientation::Left => "left",
            Orientation::Mainstream => "mainstream",
            Orientation::Right => "right",
        }
    }
}

impl fmt::Display for Orientation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Orientation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "left" => Ok(Orientation::Left),
            "mainstream" => Ok(Orientation::Mainstream),
            "right" => Ok(Orientation::Right),
            other => Err(format!("invalid orientation {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Article {
    pub id: String,
    pub publisher: String,
    pub orientation: Orientation,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    pub text: String,
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: file not found")]
    MissingFile { path: PathBuf },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: malformed record: {message}")]
    MalformedRecord { path: PathBuf, line: usize, message: String },
    #[error("{path}:{line}: duplicate article id {id:?}")]
    DuplicateId { path: PathBuf, line: usize, id: String },
    #[error("{path}:{line}: invalid orientation {value:?} (expected left, mainstream or right)")]
    InvalidOrientation { path: PathBuf, line: usize, value: String },
    #[error("article id must be nonempty")]
    EmptyId,
    #[error("duplicate article id {0:?}")]
    DuplicateArticle(String),
}

/// An ordered collection of articles with unique ids.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    articles: Vec<Article>,
}

impl Corpus {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a corpus, rejecting empty or repeated ids.
    pub fn from_articles(articles: Vec<Article>) -> Result<Self, CorpusError> {
        let mut corpus = Corpus::new();
        for article in articles {
            corpus.push(article)?;
        }
        Ok(corpus)
    }

    pub fn push(&mut self, article: Article) -> Result<(), CorpusError> {
        if article.id.is_empty() {
            return Err(CorpusError::EmptyId);
        }
        if self.articles.iter().any(|a| a.id == article.id) {
            return Err(CorpusError::DuplicateArticle(article.id));
        }
        self.articles.push(article);
        Ok(())
    }

    pub fn articles(&self) -> &[Article] {
        &self.articles
    }

    pub fn len(&self) -> usize {
        self.articles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.articles.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Article> {
        self.articles.iter()
    }

    /// Replaces every article's text, keeping metadata. Used by masking,
    /// where ids are already known to be unique.
    pub(crate) fn with_texts(&self, texts: Vec<String>) -> Corpus {
        debug_assert_eq!(texts.len(), self.articles.len());
        let articles = self.articles.iter().zip(texts).map(|(a, text)| Article { text, ..a.clone() }).collect();
        Corpus { articles }
    }

    pub fn into_articles(self) -> Vec<Article> {
        self.articles
    }
}

impl<'a> IntoIterator for &'a Corpus {
    type Item = &'a Article;
    type IntoIter = std::slice::Iter<'a, Article>;

    fn into_iter(self) -> Self::IntoIter {
        self.articles.iter()
    }
}

// Orientation is read as a plain string so that an unknown label surfaces
// as InvalidOrientation rather than a generic parse failure.
#[derive(Deserialize)]
struct RawRecord {
    id: String,
    publisher: String,
    orientation: String,
    #[serde(default)]
    title: Option<String>,
    text: String,
}

/// Loads a JSONL corpus. Blank lines are skipped; line numbers in errors are 1-based.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus, CorpusError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => CorpusError::MissingFile { path: path.to_path_buf() },
        _ => CorpusError::Io { path: path.to_path_buf(), source: e },
    })?;
    let reader = BufReader::new(file);

    let mut articles = Vec::new();
    let mut seen: HashSet<String> = HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| CorpusError::Io { path: path.to_path_buf(), source: e })?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawRecord = serde_json::from_str(&line).map_err(|e| CorpusError::MalformedRecord {
            path: path.to_path_buf(),
            line: line_no,
            message: e.to_string(),
        })?;
        let orientation = raw.orientation.parse::<Orientation>().map_err(|_| CorpusError::InvalidOrientation {
            path: path.to_path_buf(),
            line: line_no,
            value: raw.orientation.clone(),
        })?;
        if raw.id.is_empty() {
            return Err(CorpusError::MalformedRecord {
                path: path.to_path_buf(),
                line: line_no,
                message: "empty id".into(),
            });
        }
        if !seen.insert(raw.id.clone()) {
            return Err(CorpusError::DuplicateId { path: path.to_path_buf(), line: line_no, id: raw.id });
        }
        articles.push(Article { id: raw.id, publisher: raw.publisher, orientation, title: raw.title, text: raw.text });
    }
    Ok(Corpus { articles })
}

/// Writes a corpus as JSONL with the same schema `load_corpus` reads.
pub fn write_corpus<W: Write>(corpus: &Corpus, writer: W) -> std::io::Result<()> {
    let mut out = BufWriter::new(writer);
    for article in corpus {
        serde_json::to_writer(&mut out, article)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn save_corpus(corpus: &Corpus, path: impl AsRef<Path>) -> std::io::Result<()> {
    write_corpus(corpus, File::create(path)?)
}

/// Reads a bogus-pattern file: one exact pattern per line, blank lines ignored.
pub fn load_bogus_patterns(path: impl AsRef<Path>) -> Result<Vec<String>, CorpusError> {
    let path = path.as_ref();
    let content = std::fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => CorpusError::MissingFile { path: path.to_path_buf() },
        _ => CorpusError::Io { path: path.to_path_buf(), source: e },
    })?;
    Ok(content.lines().map(|l| l.trim_end_matches('\r')).filter(|l| !l.trim().is_empty()).map(str::to_owned).collect())
}

pub fn default_bogus_patterns() -> Vec<String> {
    vec![DEFAULT_BOGUS_PATTERN.to_owned()]
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleaningReport {
    pub input: usize,
    pub empty_removed: usize,
    pub bogus_removed: usize,
    pub duplicates_removed: usize,
    pub label_conflict_removed: usize,
    pub retained: usize,
}

impl CleaningReport {
    pub fn total_removed(&self) -> usize {
        self.empty_removed + self.bogus_removed + self.duplicates_removed + self.label_conflict_removed
    }
}

/// Removes, in order: empty texts, bogus texts, same-label duplicates
/// (first occurrence kept) and every article of a text group that carries
/// more than one orientation. Texts are compared after trimming.
pub fn clean_corpus(corpus: &Corpus, bogus_patterns: &[String]) -> (Corpus, CleaningReport) {
    let mut report = CleaningReport { input: corpus.len(), ..Default::default() };
    let bogus: HashSet<&str> = bogus_patterns.iter().map(|p| p.trim()).collect();

    let mut survivors: Vec<&Article> = Vec::with_capacity(corpus.len());
    for article in corpus {
        let text = article.text.trim();
        if text.is_empty() {
            report.empty_removed += 1;
        } else if bogus.contains(text) {
            report.bogus_removed += 1;
        } else {
            survivors.push(article);
        }
    }

    let mut seen: HashSet<(&str, Orientation)> = HashSet::new();
    survivors.retain(|a| {
        let fresh = seen.insert((a.text.trim(), a.orientation));
        if !fresh {
            report.duplicates_removed += 1;
        }
        fresh
    });

    let mut labels_by_text: HashMap<&str, HashSet<Orientation>> = HashMap::new();
    for a in &survivors {
        labels_by_text.entry(a.text.trim()).or_default().insert(a.orientation);
    }
    survivors.retain(|a| {
        let consistent = labels_by_text[a.text.trim()].len() == 1;
        if !consistent {
            report.label_conflict_removed += 1;
        }
        consistent
    });

    report.retained = survivors.len();
    let cleaned = Corpus { articles: survivors.into_iter().cloned().collect() };
    (cleaned, report)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub total: usize,
    pub by_orientation: BTreeMap<Orientation, usize>,
    pub by_publisher: BTreeMap<String, usize>,
}

pub fn corpus_stats(corpus: &Corpus) -> CorpusStats {
    let mut by_orientation: BTreeMap<Orientation, usize> = Orientation::ALL.iter().map(|&o| (o, 0)).collect();
    let mut by_publisher = BTreeMap::new();
    for a in corpus {
        *by_orientation.entry(a.orientation).or_default() += 1;
        *by_publisher.entry(a.publisher.clone()).or_default() += 1;
    }
    CorpusStats { total: corpus.len(), by_orientation, by_publisher }
}

/// Maps each publisher to its orientation. Fails on the first publisher
/// seen under two orientations.
pub fn publisher_orientations(corpus: &Corpus) -> Result<BTreeMap<String, Orientation>, String> {
    let mut map = BTreeMap::new();
    for a in corpus {
        match map.insert(a.publisher.clone(), a.orientation) {
            Some(prev) if prev != a.orientation => {
                return Err(format!("publisher {:?} appears as both {} and {}", a.publisher, prev, a.orientation))
            }
            _ => {}
        }
    }
    Ok(map)
}
