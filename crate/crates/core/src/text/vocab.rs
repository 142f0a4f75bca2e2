use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use super::Granularity;
use crate::error::{Error, Result};

pub const PAD: usize = 0;
pub const UNK: usize = 1;

const PAD_TOKEN: &str = "<pad>";
const UNK_TOKEN: &str = "<unk>";

/// Frozen token-to-index map with PAD and UNK reserved at 0 and 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
    pub granularity: Granularity,
    pub min_count: usize,
    pub max_size: usize,
}

impl Vocabulary {
    fn from_tokens(tokens: Vec<String>, granularity: Granularity, min_count: usize, max_size: usize) -> Self {
        let index = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Self {
            tokens,
            index,
            granularity,
            min_count,
            max_size,
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> usize {
        self.index.get(token).copied().unwrap_or(UNK)
    }

    pub fn token(&self, id: usize) -> Option<&str> {
        self.tokens.get(id).map(String::as_str)
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// Rebuilds a vocabulary from its token list (index order).
    pub fn from_token_list(
        tokens: Vec<String>,
        granularity: Granularity,
        min_count: usize,
        max_size: usize,
    ) -> Result<Self> {
        if tokens.len() < 2 || tokens[PAD] != PAD_TOKEN || tokens[UNK] != UNK_TOKEN {
            return Err(Error::Corrupt("vocabulary must start with <pad>, <unk>".into()));
        }
        let v = Self::from_tokens(tokens, granularity, min_count, max_size);
        if v.index.len() != v.tokens.len() {
            return Err(Error::Corrupt("duplicate vocabulary token".into()));
        }
        Ok(v)
    }

    /// `token<TAB>index` lines after a `#` header with the build parameters.
    /// Tabs, newlines and backslashes inside tokens are escaped.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "# granularity={} min_count={} max_size={}\n",
            self.granularity.as_str(),
            self.min_count,
            self.max_size
        );
        for (i, t) in self.tokens.iter().enumerate() {
            let _ = writeln!(out, "{}\t{i}", escape(t));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .and_then(|h| h.strip_prefix("# "))
            .ok_or_else(|| Error::Corrupt("vocabulary header missing".into()))?;
        let (mut gran, mut min_count, mut max_size) = (None, None, None);
        for kv in header.split_whitespace() {
            match kv.split_once('=') {
                Some(("granularity", v)) => gran = Some(v.parse()?),
                Some(("min_count", v)) => min_count = v.parse().ok(),
                Some(("max_size", v)) => max_size = v.parse().ok(),
                _ => return Err(Error::Corrupt(format!("bad vocabulary header field {kv:?}"))),
            }
        }
        let mut tokens = Vec::new();
        for (i, line) in lines.enumerate() {
            let (tok, idx) = line
                .rsplit_once('\t')
                .ok_or_else(|| Error::Corrupt(format!("vocabulary line {}", i + 2)))?;
            if idx.parse::<usize>().ok() != Some(i) {
                return Err(Error::Corrupt(format!("vocabulary index out of order at line {}", i + 2)));
            }
            tokens.push(unescape(tok));
        }
        Self::from_token_list(
            tokens,
            gran.ok_or_else(|| Error::Corrupt("vocabulary granularity missing".into()))?,
            min_count.unwrap_or(1),
            max_size.unwrap_or(usize::MAX),
        )
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}

fn escape(t: &str) -> String {
    t.replace('\\', "\\\\").replace('\t', "\\t").replace('\n', "\\n")
}

fn unescape(t: &str) -> String {
    let mut out = String::with_capacity(t.len());
    let mut chars = t.chars();
    while let Some(c) = chars.next() {
        if c == '\\' {
            match chars.next() {
                Some('t') => out.push('\t'),
                Some('n') => out.push('\n'),
                Some(other) => out.push(other),
                None => out.push('\\'),
            }
        } else {
            out.push(c);
        }
    }
    out
}

/// Tokens with frequency >= `min_count`, most frequent first (ties broken
/// lexicographically), capped so the vocabulary holds at most `max_size`
/// entries including PAD and UNK.
pub fn build_vocab<S: AsRef<str>>(
    corpus: &[Vec<S>],
    granularity: Granularity,
    min_count: usize,
    max_size: usize,
) -> Vocabulary {
    let min_count = min_count.max(1);
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for doc in corpus {
        for t in doc {
            *counts.entry(t.as_ref()).or_default() += 1;
        }
    }
    let mut ranked: Vec<(&str, usize)> = counts
        .into_iter()
        .filter(|&(t, c)| c >= min_count && t != PAD_TOKEN && t != UNK_TOKEN)
        .collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    ranked.truncate(max_size.saturating_sub(2));
    let tokens = [PAD_TOKEN, UNK_TOKEN]
        .into_iter()
        .chain(ranked.into_iter().map(|(t, _)| t))
        .map(String::from)
        .collect();
    Vocabulary::from_tokens(tokens, granularity, min_count, max_size)
}

/// Fixed-length id sequence; positions at or past `true_length` hold PAD.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedText {
    pub ids: Vec<usize>,
    pub true_length: usize,
}

/// Keeps the first `max_len` tokens and right-pads with PAD.
pub fn encode_fixed<S: AsRef<str>>(tokens: &[S], vocab: &Vocabulary, max_len: usize) -> EncodedText {
    let true_length = tokens.len().min(max_len);
    let mut ids: Vec<usize> = tokens[..true_length].iter().map(|t| vocab.id(t.as_ref())).collect();
    ids.resize(max_len, PAD);
    EncodedText { ids, true_length }
}
