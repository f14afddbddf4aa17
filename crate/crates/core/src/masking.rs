//! Tokenization and the single-asterisk masking transform.
//!
//! A token is a maximal run of alphanumeric characters; everything else
//! (whitespace, punctuation, apostrophes) is inter-token material and is
//! copied through verbatim. A masked word becomes `*` and a masked number
//! (all ASCII digits) becomes `#`, so the token count never changes.
//!
//! Membership in the frequent-word set is decided on the lowercased
//! surface. Numbers are never looked up: the topic model keeps them and
//! the style model masks them.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::lexicon::WordSet;

pub const WORD_MASK: char = '*';
pub const NUMBER_MASK: char = '#';

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TokenKind {
    Word,
    Number,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TokenSpan<'a> {
    /// Byte offset of the first character.
    pub start: usize,
    /// Byte offset one past the last character.
    pub end: usize,
    pub surface: &'a str,
    pub kind: TokenKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MaskMode {
    /// Masks frequent words, keeping content words and numbers.
    #[serde(rename = "topic")]
    TopicModel,
    /// Masks everything except frequent words; numbers are always masked.
    #[serde(rename = "style")]
    StyleModel,
    /// Leaves the text untouched.
    #[serde(rename = "identity")]
    Identity,
}

impl MaskMode {
    pub fn as_str(self) -> &'static str {
        match self {
            MaskMode::TopicModel => "topic",
            MaskMode::StyleModel => "style",
            MaskMode::Identity => "identity",
        }
    }

    /// Whether a token of the given kind and (lowercased) surface is masked.
    pub fn masks(self, kind: TokenKind, lowercase_surface: &str, words: &WordSet) -> bool {
        match (self, kind) {
            (MaskMode::Identity, _) => false,
            (MaskMode::TopicModel, TokenKind::Number) => false,
            (MaskMode::StyleModel, TokenKind::Number) => true,
            (MaskMode::TopicModel, TokenKind::Word) => words.contains(lowercase_surface),
            (MaskMode::StyleModel, TokenKind::Word) => !words.contains(lowercase_surface),
        }
    }
}

impl fmt::Display for MaskMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MaskMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "topic" => Ok(MaskMode::TopicModel),
            "style" => Ok(MaskMode::StyleModel),
            "identity" => Ok(MaskMode::Identity),
            other => Err(format!("unknown mask mode {other:?} (expected topic, style or identity)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskedText {
    pub text: String,
    pub mode: MaskMode,
    pub k_used: usize,
}

fn classify(surface: &str) -> TokenKind {
    if surface.bytes().all(|b| b.is_ascii_digit()) {
        TokenKind::Number
    } else {
        TokenKind::Word
    }
}

pub fn tokenize(text: &str) -> Vec<TokenSpan<'_>> {
    let mut tokens = Vec::new();
    let mut start: Option<usize> = None;
    for (i, c) in text.char_indices() {
        match (c.is_alphanumeric(), start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                tokens.push(span(text, s, i));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        tokens.push(span(text, s, text.len()));
    }
    tokens
}

/// Number of token positions in masked text: alphanumeric tokens plus
/// every mask symbol, which stands in for exactly one original token.
pub fn masked_token_count(text: &str) -> usize {
    tokenize(text).len() + text.chars().filter(|&c| c == WORD_MASK || c == NUMBER_MASK).count()
}

fn span(text: &str, start: usize, end: usize) -> TokenSpan<'_> {
    let surface = &text[start..end];
    TokenSpan { start, end, surface, kind: classify(surface) }
}

pub fn mask_text(text: &str, words: &WordSet, mode: MaskMode) -> MaskedText {
    let k_used = words.k();
    if mode == MaskMode::Identity {
        return MaskedText { text: text.to_owned(), mode, k_used };
    }
    let mut out = String::with_capacity(text.len());
    let mut cursor = 0;
    for token in tokenize(text) {
        let lower = token.surface.to_lowercase();
        if mode.masks(token.kind, &lower, words) {
            out.push_str(&text[cursor..token.start]);
            out.push(match token.kind {
                TokenKind::Word => WORD_MASK,
                TokenKind::Number => NUMBER_MASK,
            });
            cursor = token.end;
        }
    }
    out.push_str(&text[cursor..]);
    MaskedText { text: out, mode, k_used }
}

/// Masks every article's text in parallel; output order follows the input.
pub fn mask_corpus(corpus: &Corpus, words: &WordSet, mode: MaskMode) -> Corpus {
    if mode == MaskMode::Identity {
        return corpus.clone();
    }
    let texts: Vec<String> = corpus.articles().par_iter().map(|a| mask_text(&a.text, words, mode).text).collect();
    corpus.with_texts(texts)
}
