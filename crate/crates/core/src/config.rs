//! Flat `key = value` configuration files.
//!
//! One setting per line; blank lines and lines starting with `#` are ignored;
//! whitespace around keys and values is trimmed. Unknown keys are rejected so
//! typos surface immediately.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Keys accepted in configuration files.
pub const KNOWN_KEYS: &[&str] = &[
    "seed",
    "ratios",
    "mode",
    "max_duration",
    "model_kind",
    "epochs",
    "lr",
    "batch_size",
    "optimizer",
    "max_steps",
    "clip_norm",
    "dropout",
    "embed_dim",
    "hidden",
    "audio_proj",
    "audio_segments",
    "granularity",
    "max_len",
    "min_count",
    "max_vocab",
    "features",
    "target_rate_hz",
    "n_mels",
    "n_mfcc",
    "fft_size",
    "frame_len_s",
    "frame_shift_s",
    "style",
    "full_precision",
    "addr",
];

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split_once('#').map_or(raw, |(content, _)| content).trim();
            if line.is_empty() {
                continue;
            }
            let bad = |m: String| Error::Config(format!("config line {}: {m}", i + 1));
            let (k, v) = line.split_once('=').ok_or_else(|| bad("expected key = value".into()))?;
            let (k, v) = (k.trim(), v.trim());
            if !KNOWN_KEYS.contains(&k) {
                return Err(bad(format!("unknown key {k:?}")));
            }
            if values.insert(k.to_string(), v.to_string()).is_some() {
                return Err(bad(format!("duplicate key {k:?}")));
            }
        }
        Ok(Self { values })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| Error::Config(format!("config key {key}: cannot parse {v:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_flat_pairs() {
        let c = ConfigFile::parse("# comment\n\nseed = 7\n lr=0.003 \nmode = speaker-disjoint\n").unwrap();
        assert_eq!(c.get::<u64>("seed").unwrap(), Some(7));
        assert_eq!(c.get::<f64>("lr").unwrap(), Some(0.003));
        assert_eq!(c.raw("mode"), Some("speaker-disjoint"));
        assert_eq!(c.get::<u64>("epochs").unwrap(), None);

        let c = ConfigFile::parse("optimizer = sgd   # adam | sgd\n").unwrap();
        assert_eq!(c.raw("optimizer"), Some("sgd"));
    }

    #[test]
    fn readme_example_is_valid() {
        let readme = include_str!("../../../README.md");
        let block = readme.split("```ini\n").nth(1).unwrap().split("```").next().unwrap();
        let c = ConfigFile::parse(block).unwrap();
        assert_eq!(c.raw("features"), Some("mfcc"));
        assert_eq!(c.get::<f64>("frame_shift_s").unwrap(), Some(0.010));
        for key in KNOWN_KEYS {
            assert!(c.raw(key).is_some(), "README omits {key}");
        }
    }

    #[test]
    fn rejects_bad_lines() {
        assert!(ConfigFile::parse("seed 7").is_err());
        assert!(ConfigFile::parse("sed = 7").is_err());
        assert!(ConfigFile::parse("seed = 1\nseed = 2").is_err());
        let c = ConfigFile::parse("seed = seven").unwrap();
        assert!(c.get::<u64>("seed").is_err());
    }
}
