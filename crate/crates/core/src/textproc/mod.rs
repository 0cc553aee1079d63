//! Tokenization, stopword removal and stemming shared by every lexical path.

pub mod porter;

use std::collections::BTreeSet;
use std::io::BufRead;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The stopword list shipped with the crate, one word per line.
pub const DEFAULT_STOPWORDS: &str = include_str!("../../data/stopwords_en.txt");

/// A lowercase, whitespace-free token.
pub type Token = String;

/// Tokenizer settings. The stopword set is fixed once the config is built.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenPipelineConfig {
    stopwords: Arc<BTreeSet<String>>,
    pub stem: bool,
    pub drop_digits: bool,
}

impl Default for TokenPipelineConfig {
    /// Shipped stopwords, stemming on, digits kept.
    fn default() -> Self {
        Self::new(parse_stopwords(DEFAULT_STOPWORDS), true, false)
    }
}

impl TokenPipelineConfig {
    pub fn new(stopwords: BTreeSet<String>, stem: bool, drop_digits: bool) -> Self {
        let stopwords = stopwords.into_iter().map(|w| w.to_lowercase()).collect();
        Self { stopwords: Arc::new(stopwords), stem, drop_digits }
    }

    /// No stopwords, no stemming, digits kept.
    pub fn plain() -> Self {
        Self::new(BTreeSet::new(), false, false)
    }

    /// Same settings with a different stopword list.
    pub fn with_stopwords(&self, stopwords: BTreeSet<String>) -> Self {
        Self::new(stopwords, self.stem, self.drop_digits)
    }

    pub fn with_stem(&self, stem: bool) -> Self {
        Self { stem, ..self.clone() }
    }

    pub fn stopwords(&self) -> &BTreeSet<String> {
        &self.stopwords
    }

    pub fn is_stopword(&self, word: &str) -> bool {
        self.stopwords.contains(word)
    }

    pub fn tokenize(&self, text: &str) -> Vec<Token> {
        tokenize(text, self)
    }
}

/// Reads a stopword file: one word per line, blank lines and `#` comments ignored.
pub fn load_stopwords<R: BufRead>(reader: R) -> Result<BTreeSet<String>> {
    let mut words = BTreeSet::new();
    for line in reader.lines() {
        let line = line.map_err(Error::Io)?;
        let word = line.trim();
        if !word.is_empty() && !word.starts_with('#') {
            words.insert(word.to_lowercase());
        }
    }
    Ok(words)
}

fn parse_stopwords(text: &str) -> BTreeSet<String> {
    load_stopwords(text.as_bytes()).expect("in-memory read")
}

/// Splits `text` into lowercase alphanumeric runs, then filters and stems.
///
/// Hyphens and apostrophes are separators like any other punctuation.
/// Stopwords are checked on the surface form and again after stemming, so no
/// output token is ever in the stopword set. Digit removal looks at the
/// surface form only.
pub fn tokenize(text: &str, cfg: &TokenPipelineConfig) -> Vec<Token> {
    let mut out = Vec::new();
    for raw in text.split(|c: char| !c.is_alphanumeric()) {
        if raw.is_empty() {
            continue;
        }
        let surface = raw.to_lowercase();
        if cfg.is_stopword(&surface) {
            continue;
        }
        if cfg.drop_digits && surface.chars().all(|c| c.is_numeric()) {
            continue;
        }
        let token = if cfg.stem { porter::stem(&surface) } else { surface };
        if token.is_empty() || cfg.is_stopword(&token) {
            continue;
        }
        out.push(token);
    }
    out
}

/// Heading key tokens: the shipped stopwords, stemming and digit removal.
pub fn normalize_heading(heading: &str) -> Vec<Token> {
    static CFG: std::sync::OnceLock<TokenPipelineConfig> = std::sync::OnceLock::new();
    let cfg = CFG.get_or_init(|| {
        let base = TokenPipelineConfig::default();
        TokenPipelineConfig { drop_digits: true, stem: true, ..base }
    });
    tokenize(heading, cfg)
}

/// Heading tokens joined by single spaces.
pub fn heading_key(heading: &str) -> String {
    normalize_heading(heading).join(" ")
}
