//! Tokenization, vocabularies, fixed-length encoding and n-gram features.
//!
//! The pipeline is uncased end to end. Dialect-transcription diacritics and
//! modifier letters are kept; only punctuation is stripped in word mode.

mod ngram;
mod vocab;

use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

pub use ngram::{build_idf, ngram_counts, ngram_features, NgramVocab, SparseFeatures};
pub use vocab::{build_vocab, encode_fixed, EncodedText, Vocabulary, PAD, UNK};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Granularity {
    Word,
    Char,
}

impl Granularity {
    pub fn as_str(self) -> &'static str {
        match self {
            Granularity::Word => "word",
            Granularity::Char => "char",
        }
    }
}

impl std::str::FromStr for Granularity {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "word" => Ok(Granularity::Word),
            "char" => Ok(Granularity::Char),
            _ => Err(crate::Error::Config(format!("unknown granularity {s:?}"))),
        }
    }
}

/// Text featurization settings carried in model bundles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextConfig {
    pub granularity: Granularity,
    pub max_len: usize,
    pub min_count: usize,
    pub max_vocab: usize,
}

impl Default for TextConfig {
    fn default() -> Self {
        Self {
            granularity: Granularity::Word,
            max_len: 64,
            min_count: 1,
            max_vocab: 20_000,
        }
    }
}

fn punctuation() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^\p{P}$").unwrap())
}

fn is_punct(c: char) -> bool {
    let mut buf = [0u8; 4];
    punctuation().is_match(c.encode_utf8(&mut buf))
}

fn is_joiner(c: char) -> bool {
    matches!(c, '\'' | '’' | '-' | '‐')
}

fn clean_word(word: &str) -> String {
    let chars: Vec<char> = word.chars().collect();
    let mut out = String::with_capacity(word.len());
    for (i, &c) in chars.iter().enumerate() {
        if !is_punct(c) {
            out.push(c);
        } else if is_joiner(c) {
            let before = i > 0 && !is_punct(chars[i - 1]);
            let after = chars.get(i + 1).is_some_and(|&n| !is_punct(n));
            if before && after {
                out.push(c);
            }
        }
    }
    out
}

pub fn tokenize(s: &str, granularity: Granularity) -> Vec<String> {
    let lower = s.to_lowercase();
    match granularity {
        Granularity::Word => lower
            .split_whitespace()
            .map(clean_word)
            .filter(|w| !w.is_empty())
            .collect(),
        Granularity::Char => lower.chars().map(String::from).collect(),
    }
}
